"""
Yang-Mills field data on a periodic box.

Gauge algebras from structure constants, gauged vector calculus on spectral
lattices, divergence-free Fourier mode bases, and assembly of the classical
energy-mass functional as a polynomial symbol.

Array layout: vector fields are (3, dim, N, N, N), spatial component first,
color second; scalar (Lie-algebra valued) fields are (dim, N, N, N).
"""
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, sqrt
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from ymgap.app.models import AlgebraName, EnergyForm
from ymgap.app.symbols import PolySymbol, diff

logger = logging.getLogger(__name__)

STRUCTURE_TOL = 1e-12
DEFAULT_MAX_MODES = 40

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in itertools.permutations(range(3)):
    LEVI_CIVITA[_i, _j, _k] = np.linalg.det(np.eye(3)[[_i, _j, _k]])


# gauge algebras


@dataclass(frozen=True, eq=False)
class GaugeAlgebra:
    """
    Real Lie algebra given by structure constants in an orthonormal basis.

    Attributes:
        name: Label used in reports
        structure_constants: Array f[k, i, j] = [b_i, b_j] . b_k
    """
    name: str
    structure_constants: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.structure_constants, dtype=float)
        if f.ndim != 3 or len(set(f.shape)) != 1:
            raise ValueError(f"Structure constants must be a cubic 3-tensor, got shape {f.shape}")
        f.setflags(write=False)
        object.__setattr__(self, "structure_constants", f)
        scale = max(1.0, float(np.abs(f).max(initial=0.0)))
        for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
            if np.abs(f + f.transpose(perm)).max(initial=0.0) > STRUCTURE_TOL * scale:
                raise ValueError(f"Structure constants of {self.name} are not totally antisymmetric")
        residual = self.jacobi_residual()
        if residual > STRUCTURE_TOL * scale**2:
            raise ValueError(f"Jacobi identity fails for {self.name}: residual {residual:.3e}")

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    @property
    def is_abelian(self) -> bool:
        return not np.any(self.structure_constants)

    def jacobi_residual(self) -> float:
        """Largest entry of [[b_i, b_j], b_k] + cyclic, expressed in the basis."""
        f = self.structure_constants
        jac = (
            np.einsum("mij,lmk->lijk", f, f)
            + np.einsum("mjk,lmi->lijk", f, f)
            + np.einsum("mki,lmj->lijk", f, f)
        )
        return float(np.abs(jac).max(initial=0.0))

    def scaled(self, factor: float) -> "GaugeAlgebra":
        """Same algebra with every structure constant multiplied by factor."""
        return GaugeAlgebra(f"{self.name}*{factor:g}", self.structure_constants * factor)

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pointwise commutator of color-first arrays: [x, y]^k = f[k,i,j] x^i y^j."""
        if self.is_abelian:
            return np.zeros(np.broadcast_shapes(x.shape, y.shape))
        return np.einsum("kij,i...,j...->k...", self.structure_constants, x, y)

    def killing_weight(self) -> float:
        """kappa with sum_{k,i} f[k,i,j] f[k,i,j'] = kappa delta_{jj'} (0 for abelian)."""
        f = self.structure_constants
        gram = np.einsum("kij,kil->jl", f, f)
        return float(gram[0, 0])


def _su_n_basis(n: int) -> List[np.ndarray]:
    """Anti-Hermitian basis i*lambda/sqrt(2) from generalized Gell-Mann matrices."""
    basis = []

    def unit(j: int, k: int) -> np.ndarray:
        m = np.zeros((n, n), dtype=complex)
        m[j, k] = 1.0
        return m

    for k in range(1, n):
        for j in range(k):
            basis.append(unit(j, k) + unit(k, j))
            basis.append(-1j * (unit(j, k) - unit(k, j)))
        diagonal = np.zeros((n, n), dtype=complex)
        diagonal[np.arange(k), np.arange(k)] = 1.0
        diagonal[k, k] = -k
        basis.append(sqrt(2.0 / (k * (k + 1))) * diagonal)
    return [1j * lam / sqrt(2.0) for lam in basis]


def su_n_algebra(n: int) -> GaugeAlgebra:
    """
    su(n) with the trace product X . Y = Re Tr(X^dagger Y).

    Args:
        n: Matrix size, at least 2

    Returns:
        GaugeAlgebra of dimension n^2 - 1
    """
    if n < 2:
        raise ValueError(f"su(n) needs n >= 2, got {n}")
    basis = _su_n_basis(n)
    dim = len(basis)
    f = np.zeros((dim, dim, dim))
    for i, j in itertools.combinations(range(dim), 2):
        commutator = basis[i] @ basis[j] - basis[j] @ basis[i]
        for k in range(dim):
            value = np.real(np.trace(basis[k].conj().T @ commutator))
            f[k, i, j] = value
            f[k, j, i] = -value
    f[np.abs(f) < 1e-15] = 0.0
    return GaugeAlgebra(f"su{n}", f)


def su2_algebra() -> GaugeAlgebra:
    return su_n_algebra(2)


def su3_algebra() -> GaugeAlgebra:
    return su_n_algebra(3)


def abelian_algebra(dim: int = 1) -> GaugeAlgebra:
    """Commutative algebra of the given dimension (the Maxwell limit)."""
    if dim < 1:
        raise ValueError(f"dim must be at least 1, got {dim}")
    return GaugeAlgebra("abelian", np.zeros((dim, dim, dim)))


def make_algebra(name: Union[AlgebraName, str]) -> GaugeAlgebra:
    """Build the algebra named in a run configuration."""
    name = AlgebraName(name)
    if name == AlgebraName.SU2:
        return su2_algebra()
    if name == AlgebraName.SU3:
        return su3_algebra()
    return abelian_algebra(1)


def _bracket_square(algebra: GaugeAlgebra, xs: Sequence[Sequence[PolySymbol]]) -> PolySymbol:
    """[a x, a] . [a x, a] for components xs[spatial][color] given as symbols."""
    f = algebra.structure_constants
    n_modes = xs[0][0].n_modes
    nonzero = list(zip(*np.nonzero(f)))
    total = PolySymbol.zero(n_modes)
    for i in range(3):
        for k in range(algebra.dim):
            w = PolySymbol.zero(n_modes)
            for j, l in itertools.permutations(range(3), 2):
                eps = LEVI_CIVITA[i, j, l]
                if eps == 0:
                    continue
                for kk, c, d in nonzero:
                    if kk == k:
                        w = w + (xs[j][c] * xs[l][d]).scale(float(eps * f[k, c, d]))
            total = total + w * w
    return total


def bracket_quartic(algebra: GaugeAlgebra, complexified: bool = False) -> PolySymbol:
    """
    The quartic [a x, a] . [a x, a] over the 3 * dim real components of a.

    Variable v = 3-index * dim + color. With complexified set, each component
    is written as z_v + z*_v, otherwise as the plain variable z_v.
    """
    n = 3 * algebra.dim
    xs = []
    for j in range(3):
        row = []
        for c in range(algebra.dim):
            v = j * algebra.dim + c
            x = PolySymbol.variable(n, v)
            if complexified:
                x = x + PolySymbol.variable(n, v, conjugate=True)
            row.append(x)
        xs.append(row)
    return _bracket_square(algebra, xs)


def killing_constant(algebra: GaugeAlgebra, spatial_dim: int = 3) -> float:
    """
    Ratio of the flat Laplacian of the bracket quartic to a . a.

    Args:
        algebra: Gauge algebra
        spatial_dim: Number of space dimensions; the cross bracket needs 3

    Returns:
        The constant c with Laplacian([a x, a] . [a x, a]) = c (a . a)

    Raises:
        ValueError: If the ratio is not constant to 1e-10 (bad structure constants)
    """
    if spatial_dim != 3:
        raise ValueError(f"The cross bracket is defined in 3 space dimensions, got {spatial_dim}")
    quartic = bracket_quartic(algebra)
    n = quartic.n_modes
    lap = PolySymbol.zero(n)
    for v in range(n):
        lap = lap + diff(diff(quartic, v), v)
    if lap.is_zero():
        return 0.0
    square = {tuple(2 if i == v else 0 for i in range(n)) for v in range(n)}
    ratios = []
    for (beta, alpha), coeff in lap.terms.items():
        if alpha not in square or any(beta):
            if abs(coeff) > 1e-10 * lap.max_abs_coefficient():
                raise ValueError(
                    f"Laplacian of the quartic has a cross term {alpha} for {algebra.name}"
                )
            continue
        ratios.append(float(np.real(coeff)))
    if len(ratios) != n:
        raise ValueError(f"Laplacian of the quartic misses square terms for {algebra.name}")
    c = ratios[0]
    if max(abs(r - c) for r in ratios) > 1e-10 * abs(c):
        raise ValueError(f"Killing ratio is not constant for {algebra.name}: {ratios}")
    logger.debug("Killing constant of %s: %s", algebra.name, c)
    return c


# lattice fields


@lru_cache(maxsize=32)
def _wavenumbers(N: int, L: float) -> np.ndarray:
    """Angular wavenumbers of an N-point periodic grid, Nyquist entry zeroed."""
    k = 2.0 * np.pi / L * np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0.0
    k.setflags(write=False)
    return k


def grid_coordinates(N: int, L: float) -> np.ndarray:
    """Array (3, N, N, N) of site positions x_j = L * n_j / N."""
    axis = L * np.arange(N) / N
    return np.array(np.meshgrid(axis, axis, axis, indexing="ij"))


def spectral_derivative(values: np.ndarray, j: int, L: float) -> np.ndarray:
    """d/dx_j of a real array whose last three axes are the periodic grid."""
    N = values.shape[-1]
    k = _wavenumbers(N, L)
    axis = values.ndim - 3 + j
    shape = [1] * values.ndim
    shape[axis] = N
    spectrum = np.fft.fft(values, axis=axis)
    return np.real(np.fft.ifft(1j * k.reshape(shape) * spectrum, axis=axis))


@dataclass
class LatticeField:
    """
    Lie-algebra valued field sampled on an N^3 periodic grid of side L.

    Attributes:
        values: (3, dim, N, N, N) for vector fields or (dim, N, N, N) for scalars
        L: Box side
        algebra: Gauge algebra of the color index
    """
    values: np.ndarray
    L: float
    algebra: GaugeAlgebra

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim not in (4, 5):
            raise ValueError(f"Field array must have 4 or 5 axes, got shape {self.values.shape}")
        N = self.values.shape[-1]
        if self.values.shape[-3:] != (N, N, N):
            raise ValueError(f"Grid axes must be cubic, got shape {self.values.shape}")
        color_axis = 1 if self.values.ndim == 5 else 0
        if self.values.shape[color_axis] != self.algebra.dim:
            raise ValueError(
                f"Color axis has length {self.values.shape[color_axis]}, "
                f"algebra {self.algebra.name} has dimension {self.algebra.dim}"
            )
        if self.values.ndim == 5 and self.values.shape[0] != 3:
            raise ValueError(f"Vector field needs 3 spatial components, got {self.values.shape[0]}")

    @classmethod
    def zeros(cls, N: int, L: float, algebra: GaugeAlgebra, vector: bool = True) -> "LatticeField":
        shape = (3, algebra.dim, N, N, N) if vector else (algebra.dim, N, N, N)
        return cls(np.zeros(shape), L, algebra)

    @property
    def N(self) -> int:
        return self.values.shape[-1]

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 5

    @property
    def cell_volume(self) -> float:
        return (self.L / self.N) ** 3

    def like(self, values: np.ndarray) -> "LatticeField":
        return LatticeField(values, self.L, self.algebra)

    def __add__(self, other: "LatticeField") -> "LatticeField":
        check_compatible(self, other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "LatticeField") -> "LatticeField":
        check_compatible(self, other)
        return self.like(self.values - other.values)

    def __mul__(self, factor: float) -> "LatticeField":
        return self.like(self.values * factor)

    __rmul__ = __mul__

    def __neg__(self) -> "LatticeField":
        return self.like(-self.values)

    def inner(self, other: "LatticeField") -> float:
        """L^2 product sum over space and color, integrated with the cell volume."""
        check_compatible(self, other)
        return float(np.sum(self.values * other.values) * self.cell_volume)

    def norm(self) -> float:
        return sqrt(max(self.inner(self), 0.0))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def check_compatible(*fields: LatticeField) -> None:
    """
    Raise unless all fields share grid, box and algebra.

    Raises:
        ValueError: On any grid, box or algebra mismatch
    """
    first = fields[0]
    for other in fields[1:]:
        if other.N != first.N or other.L != first.L:
            raise ValueError(
                f"Grid mismatch: N={first.N}, L={first.L} vs N={other.N}, L={other.L}"
            )
        if other.algebra is not first.algebra and not np.array_equal(
            other.algebra.structure_constants, first.algebra.structure_constants
        ):
            raise ValueError(
                f"Algebra mismatch: {first.algebra.name} vs {other.algebra.name}"
            )


def _require(field_: LatticeField, vector: bool, label: str) -> None:
    if field_.is_vector != vector:
        kind = "vector" if vector else "scalar"
        raise ValueError(f"{label} must be a {kind} field, got shape {field_.values.shape}")


def grad(u: LatticeField) -> LatticeField:
    _require(u, False, "u")
    return u.like(np.array([spectral_derivative(u.values, j, u.L) for j in range(3)]))


def div(b: LatticeField) -> LatticeField:
    _require(b, True, "b")
    return b.like(sum(spectral_derivative(b.values[j], j, b.L) for j in range(3)))


def curl(b: LatticeField) -> LatticeField:
    _require(b, True, "b")
    out = np.zeros_like(b.values)
    for i, j, k in itertools.permutations(range(3)):
        eps = LEVI_CIVITA[i, j, k]
        out[i] += eps * spectral_derivative(b.values[k], j, b.L)
    return b.like(out)


def cross_bracket(a: LatticeField, b: LatticeField) -> LatticeField:
    """[a x, b]_i = eps_ijk [a_j, b_k]."""
    check_compatible(a, b)
    _require(a, True, "a")
    _require(b, True, "b")
    out = np.zeros_like(b.values)
    if a.algebra.is_abelian:
        return b.like(out)
    for i, j, k in itertools.permutations(range(3)):
        out[i] += LEVI_CIVITA[i, j, k] * a.algebra.bracket(a.values[j], b.values[k])
    return b.like(out)


def dot_bracket(a: LatticeField, b: LatticeField) -> LatticeField:
    """[a; b] = sum_k [a_k, b_k], a scalar field."""
    check_compatible(a, b)
    _require(a, True, "a")
    _require(b, True, "b")
    total = sum(a.algebra.bracket(a.values[k], b.values[k]) for k in range(3))
    return LatticeField(total, a.L, a.algebra)


def gauged_grad(a: LatticeField, u: LatticeField) -> LatticeField:
    """grad^a_k u = d_k u - [a_k, u]."""
    check_compatible(a, u)
    _require(a, True, "a")
    flat = grad(u).values
    twist = np.array([a.algebra.bracket(a.values[k], u.values) for k in range(3)])
    return a.like(flat - twist)


def gauged_div(a: LatticeField, b: LatticeField) -> LatticeField:
    """div^a b = div b - [a; b]."""
    return div(b) - dot_bracket(a, b)


def gauged_curl(a: LatticeField, b: LatticeField) -> LatticeField:
    """curl^a b = curl b - [a x, b]."""
    return curl(b) - cross_bracket(a, b)


def gauged_laplacian(a: LatticeField, u: LatticeField) -> LatticeField:
    return gauged_div(a, gauged_grad(a, u))


def transverse_projector(b: LatticeField) -> LatticeField:
    """
    Remove the longitudinal Fourier part of a vector field.

    Uses the same wavenumbers as the spectral derivatives, so the discrete
    divergence of the output vanishes to rounding and the map is idempotent.
    """
    _require(b, True, "b")
    k1 = _wavenumbers(b.N, b.L)
    kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij")
    kvec = np.array([kx, ky, kz])
    k2 = np.sum(kvec**2, axis=0)
    inverse = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    spectrum = np.fft.fftn(b.values, axes=(-3, -2, -1))
    k_dot = np.einsum("j...,jc...->c...", kvec, spectrum)
    spectrum = spectrum - np.einsum("j...,c...->jc...", kvec, k_dot * inverse)
    return b.like(np.real(np.fft.ifftn(spectrum, axes=(-3, -2, -1))))


def magnetic_field(a: LatticeField) -> LatticeField:
    """B = curl a - (1/2)[a x, a], so that B_i = (1/2) eps_ijk F_jk."""
    return curl(a) - cross_bracket(a, a) * 0.5


def field_energy(a: LatticeField, e: LatticeField) -> float:
    """(1/2) integral of (B . B + e . e) by lattice quadrature."""
    check_compatible(a, e)
    b = magnetic_field(a)
    return 0.5 * (b.inner(b) + e.inner(e))


def sobolev_norm(b: LatticeField, s: float) -> float:
    """
    Torus Sobolev norm |b|_s with |b|_s^2 = integral b . (1 - Laplacian)^s b.

    Works for scalar and vector fields; s may be negative or fractional.
    """
    k1 = _wavenumbers(b.N, b.L)
    kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij")
    weight = (1.0 + kx**2 + ky**2 + kz**2) ** s
    spectrum = np.fft.fftn(b.values, axes=(-3, -2, -1))
    smoothed = np.real(np.fft.ifftn(weight * spectrum, axes=(-3, -2, -1)))
    return sqrt(max(float(np.sum(b.values * smoothed) * b.cell_volume), 0.0))


# divergence-free mode bases


@dataclass(frozen=True)
class Mode:
    """
    One real divergence-free field mode: polarization * profile(k . x) * b_color.

    The profile is sqrt(2) cos, sqrt(2) sin, or 1 for the zero wavevector, so
    every mode has unit mean square over the box.
    """
    wavevector: Tuple[int, int, int]
    polarization: Tuple[float, float, float]
    parity: str
    color: int


def _half_space(m: Tuple[int, int, int]) -> bool:
    for entry in m:
        if entry != 0:
            return entry > 0
    return False


def _polarizations(m: Tuple[int, int, int]) -> List[np.ndarray]:
    direction = np.array(m, dtype=float)
    direction /= np.linalg.norm(direction)
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(direction)))] = 1.0
    first = np.cross(direction, ref)
    first /= np.linalg.norm(first)
    second = np.cross(direction, first)
    return [first, second]


@dataclass
class ModeBasis:
    """
    Transverse Fourier modes on a periodic box, tensored with color.

    Attributes:
        L: Box side
        kmax: Largest |m|_inf of the integer wavevectors
        algebra: Gauge algebra supplying the color index
        modes: Ordered modes, color outermost
    """
    L: float
    kmax: int
    algebra: GaugeAlgebra
    modes: List[Mode] = field(default_factory=list)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def volume(self) -> float:
        return self.L**3

    def subset(self, indices: Sequence[int]) -> "ModeBasis":
        """Basis of the selected modes, in the order given."""
        for i in indices:
            if not 0 <= i < self.n_modes:
                raise ValueError(f"Mode index {i} out of range for {self.n_modes} modes")
        return ModeBasis(self.L, self.kmax, self.algebra, [self.modes[i] for i in indices])

    def color_subset(self, colors: Sequence[int]) -> List[int]:
        """Indices of the modes whose color is in colors."""
        wanted = set(colors)
        return [i for i, mode in enumerate(self.modes) if mode.color in wanted]

    def with_box(self, L: float) -> "ModeBasis":
        """Same modes on a box of another size."""
        return ModeBasis(L, self.kmax, self.algebra, list(self.modes))

    def arrays(self):
        """Integer wavevectors, polarizations, parities and colors as arrays."""
        m = np.array([mode.wavevector for mode in self.modes], dtype=float).reshape(-1, 3)
        eps = np.array([mode.polarization for mode in self.modes], dtype=float).reshape(-1, 3)
        parity = np.array([mode.parity for mode in self.modes])
        colors = np.array([mode.color for mode in self.modes], dtype=int)
        return m, eps, parity, colors

    def profiles(self, x: np.ndarray):
        """
        Profiles and their phase derivatives at points x.

        Args:
            x: Array (3, ...) of positions

        Returns:
            Tuple (p, dp) of arrays (n_modes, ...) with p(k . x) and p'(k . x)
        """
        m, _, parity, _ = self.arrays()
        k = 2.0 * np.pi / self.L * m
        phase = np.tensordot(k, x, axes=(1, 0))
        root2 = sqrt(2.0)
        cos_, sin_ = np.cos(phase), np.sin(phase)
        shape = (-1,) + (1,) * (phase.ndim - 1)
        is_cos = (parity == "cos").reshape(shape)
        is_sin = (parity == "sin").reshape(shape)
        p = np.where(is_cos, root2 * cos_, np.where(is_sin, root2 * sin_, 1.0))
        dp = np.where(is_cos, -root2 * sin_, np.where(is_sin, root2 * cos_, 0.0))
        return p, dp

    def reconstruct(self, coefficients: Sequence[float], N: int) -> LatticeField:
        """Field sum_m c_m phi_m(x) on an N^3 grid."""
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (self.n_modes,):
            raise ValueError(f"Expected {self.n_modes} coefficients, got {coefficients.shape}")
        _, eps, _, colors = self.arrays()
        p, _ = self.profiles(grid_coordinates(N, self.L))
        values = np.zeros((3, self.algebra.dim, N, N, N))
        for idx in range(self.n_modes):
            values[:, colors[idx]] += coefficients[idx] * eps[idx][:, None, None, None] * p[idx]
        return LatticeField(values, self.L, self.algebra)

    def coefficients(self, b: LatticeField) -> np.ndarray:
        """Mode coefficients (1/V) integral b . phi_m of a vector field."""
        _require(b, True, "b")
        _, eps, _, colors = self.arrays()
        p, _ = self.profiles(grid_coordinates(b.N, self.L))
        out = np.empty(self.n_modes)
        for idx in range(self.n_modes):
            component = np.tensordot(eps[idx], b.values[:, colors[idx]], axes=(0, 0))
            out[idx] = np.mean(component * p[idx])
        return out


def build_mode_basis(L: float, kmax: int, algebra: GaugeAlgebra) -> ModeBasis:
    """
    Enumerate transverse modes with |m|_inf <= kmax.

    Each nonzero wavevector pair +-m is represented once (first nonzero entry
    positive) with two polarizations and cos/sin parities; the zero wavevector
    carries the three unit polarizations. Color is the outermost index.

    Args:
        L: Box side, positive
        kmax: Wavevector cutoff, nonnegative
        algebra: Gauge algebra

    Returns:
        ModeBasis with dim * (3 + 4 * ((2 kmax + 1)^3 - 1) / 2) modes
    """
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    if kmax < 0:
        raise ValueError(f"kmax must be nonnegative, got {kmax}")
    spatial: List[Tuple[Tuple[int, int, int], Tuple[float, float, float], str]] = []
    for axis in range(3):
        unit = tuple(1.0 if i == axis else 0.0 for i in range(3))
        spatial.append(((0, 0, 0), unit, "const"))
    for m in itertools.product(range(-kmax, kmax + 1), repeat=3):
        if not _half_space(m):
            continue
        for pol in _polarizations(m):
            for parity in ("cos", "sin"):
                spatial.append((m, tuple(float(x) for x in pol), parity))
    modes = [
        Mode(wavevector=m, polarization=pol, parity=parity, color=c)
        for c in range(algebra.dim)
        for m, pol, parity in spatial
    ]
    logger.debug("Built %d modes (kmax=%d, %s, L=%g)", len(modes), kmax, algebra.name, L)
    return ModeBasis(L, kmax, algebra, modes)


# energy assembly


def _quadrature_points(modes: ModeBasis) -> np.ndarray:
    """Flattened grid fine enough to integrate quartic products of the modes exactly."""
    n_q = max(4 * modes.kmax + 2, 2)
    return grid_coordinates(n_q, modes.L).reshape(3, -1)


def _collect_monomials(tensor: np.ndarray, rel_tol: float = 1e-13):
    """Fold a coefficient tensor into sorted index tuples and their summed weights."""
    scale = float(np.abs(tensor).max(initial=0.0))
    if scale == 0.0:
        return np.zeros((0, tensor.ndim), dtype=int), np.zeros(0)
    cleaned = np.where(np.abs(tensor) > rel_tol * scale, tensor, 0.0)
    idx = np.argwhere(cleaned != 0)
    weights = cleaned[tuple(idx.T)]
    keys = np.sort(idx, axis=1)
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.bincount(inverse.ravel(), weights=weights, minlength=len(unique))
    return unique, sums


def _substitute(
    n_modes: int, keys: np.ndarray, weights: np.ndarray, factor: complex, sign: int
) -> PolySymbol:
    """
    Rewrite sum_w prod_v x_{key_v} as a symbol with x_v = factor * (z_v + sign * z*_v).
    """
    terms: Dict = {}
    for key, weight in zip(keys, weights):
        exponents = Counter(int(v) for v in key)
        variables = sorted(exponents)
        base = complex(weight) * factor ** len(key)
        choices = [
            [(k, exponents[v] - k, comb(exponents[v], k) * sign**k) for k in range(exponents[v] + 1)]
            for v in variables
        ]
        for combo in itertools.product(*choices):
            beta = [0] * n_modes
            alpha = [0] * n_modes
            coeff = base
            for v, (k, rest, binom) in zip(variables, combo):
                beta[v], alpha[v] = k, rest
                coeff *= binom
            term = (tuple(beta), tuple(alpha))
            terms[term] = terms.get(term, 0) + coeff
    return PolySymbol(n_modes, terms)


def _a_factor(L: float) -> float:
    """A_m = sqrt(L/2) (z_m + z*_m)."""
    return sqrt(L / 2.0)


def _e_factor(L: float) -> complex:
    """E_m = -i (z_m - z*_m) / sqrt(2 L)."""
    return -1j / sqrt(2.0 * L)


def mode_coordinates(a: Sequence[float], e: Sequence[float], L: float) -> np.ndarray:
    """
    Scale-covariant complex coordinates of mode coefficients.

    Args:
        a: Field coefficients a_m (volume-normalized modes)
        e: Electric coefficients e_m
        L: Box side

    Returns:
        z_m = (A_m / sqrt(L) + i sqrt(L) E_m) / sqrt(2) with A = sqrt(V) a, E = sqrt(V) e
    """
    root_v = L**1.5
    big_a = root_v * np.asarray(a, dtype=float)
    big_e = root_v * np.asarray(e, dtype=float)
    return (big_a / sqrt(L) + 1j * sqrt(L) * big_e) / sqrt(2.0)


def field_coordinates(z: Sequence[complex], L: float) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse of mode_coordinates: mode coefficients (a, e) of a complex point."""
    z = np.asarray(z, dtype=complex)
    root_v = L**1.5
    big_a = sqrt(2.0 * L) * z.real
    big_e = sqrt(2.0 / L) * z.imag
    return big_a / root_v, big_e / root_v


def _check_size(modes: ModeBasis, max_modes: int) -> None:
    if not modes.algebra.is_abelian and modes.n_modes > max_modes:
        raise ValueError(
            f"{modes.n_modes} non-abelian modes exceed max_modes={max_modes}; "
            "assemble on ModeBasis.subset(...) instead"
        )


def _curl_vectors(modes: ModeBasis) -> np.ndarray:
    """k x polarization for every mode, k the angular wavevector."""
    m, eps, _, _ = modes.arrays()
    return np.cross(2.0 * np.pi / modes.L * m, eps)


def electric_polynomial(modes: ModeBasis) -> PolySymbol:
    """(1/2) integral e . e = (1/2) sum E_m^2."""
    n = modes.n_modes
    keys = np.array([[i, i] for i in range(n)], dtype=int).reshape(-1, 2)
    return _substitute(n, keys, np.full(n, 0.5), _e_factor(modes.L), -1)


def quadratic_polynomial(modes: ModeBasis) -> PolySymbol:
    """(1/2) integral curl a . curl a."""
    n = modes.n_modes
    if n == 0:
        return PolySymbol.zero(0)
    x = _quadrature_points(modes)
    _, dp = modes.profiles(x)
    _, _, _, colors = modes.arrays()
    y = _curl_vectors(modes)
    same_color = colors[:, None] == colors[None, :]
    gram = same_color * (y @ y.T) * (dp @ dp.T) / x.shape[1]
    keys, weights = _collect_monomials(0.5 * gram)
    return _substitute(n, keys, weights, _a_factor(modes.L), 1)


def _pair_brackets(modes: ModeBasis, p: np.ndarray):
    """Color, spatial and profile factors of [phi_m x, phi_n] for all pairs."""
    f = modes.algebra.structure_constants
    _, eps, _, colors = modes.arrays()
    n = modes.n_modes
    color_part = f[:, colors][:, :, colors].transpose(1, 2, 0)
    cross = np.cross(eps[:, None, :], eps[None, :, :])
    profile = p[:, None, :] * p[None, :, :]
    return color_part.reshape(n * n, -1), cross.reshape(n * n, 3), profile.reshape(n * n, -1)


def cubic_polynomial(modes: ModeBasis, max_modes: int = DEFAULT_MAX_MODES) -> PolySymbol:
    """
    Cross term -(1/2) integral curl a . [a x, a] of the curvature square.

    Vanishes identically on zero-wavevector modes.
    """
    n = modes.n_modes
    if modes.algebra.is_abelian or n == 0:
        return PolySymbol.zero(n)
    _check_size(modes, max_modes)
    f = modes.algebra.structure_constants
    x = _quadrature_points(modes)
    p, dp = modes.profiles(x)
    _, eps, _, colors = modes.arrays()
    y = _curl_vectors(modes)
    cross = np.cross(eps[:, None, :], eps[None, :, :])
    color_part = f[colors][:, colors][:, :, colors]
    spatial = np.einsum("mi,npi->mnp", y, cross)
    profile = np.einsum("mx,nx,px->mnp", dp, p, p) / x.shape[1]
    tensor = -0.5 * modes.volume**-0.5 * color_part * spatial * profile
    keys, weights = _collect_monomials(tensor)
    return _substitute(n, keys, weights, _a_factor(modes.L), 1)


def quartic_polynomial(modes: ModeBasis, max_modes: int = DEFAULT_MAX_MODES) -> PolySymbol:
    """(1/8) integral [a x, a] . [a x, a]."""
    n = modes.n_modes
    if modes.algebra.is_abelian or n == 0:
        return PolySymbol.zero(n)
    _check_size(modes, max_modes)
    x = _quadrature_points(modes)
    p, _ = modes.profiles(x)
    color_part, cross, profile = _pair_brackets(modes, p)
    gram = (color_part @ color_part.T) * (cross @ cross.T) * (profile @ profile.T) / x.shape[1]
    tensor = (0.125 / modes.volume) * gram.reshape(n, n, n, n)
    keys, weights = _collect_monomials(tensor)
    return _substitute(n, keys, weights, _a_factor(modes.L), 1)


def number_polynomial(modes: ModeBasis) -> PolySymbol:
    """sum_m z*_m z_m, the mode count symbol."""
    n = modes.n_modes
    terms = {}
    for m in range(n):
        unit = tuple(1 if i == m else 0 for i in range(n))
        terms[(unit, unit)] = 1
    return PolySymbol(n, terms)


def energy_polynomial(
    modes: ModeBasis,
    form: Union[EnergyForm, str] = EnergyForm.NOETHER,
    max_modes: int = DEFAULT_MAX_MODES,
) -> PolySymbol:
    """
    Energy-mass functional (1/2) integral (B . B + e . e) as a symbol in z, z*.

    Args:
        modes: Mode basis; its order fixes the variable order
        form: NOETHER keeps the cubic cross term of the curvature square,
            REDUCED drops it (the divergence-free integration-by-parts form)
        max_modes: Refuse non-abelian bases larger than this

    Returns:
        Real-diagonal symbol of degree at most 4
    """
    form = EnergyForm(form)
    total = electric_polynomial(modes) + quadratic_polynomial(modes)
    total = total + quartic_polynomial(modes, max_modes)
    if form == EnergyForm.NOETHER:
        total = total + cubic_polynomial(modes, max_modes)
    logger.info(
        "Assembled %s energy on %d modes (%s, kmax=%d, L=%g): %d terms",
        form.value,
        modes.n_modes,
        modes.algebra.name,
        modes.kmax,
        modes.L,
        len(total.terms),
    )
    return total.hermitian_part()


def polynomial_energy(poly: PolySymbol, a: Sequence[float], e: Sequence[float], L: float) -> float:
    """Evaluate an energy symbol at mode coefficients (a, e)."""
    return float(np.real(poly.evaluate(mode_coordinates(a, e, L))))
