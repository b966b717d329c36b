"""
Eigenvalue extraction and spectral experiments.

Everything here works on anti-normal quantizations of the Yang-Mills energy:
discreteness and gaps at truncation, Galerkin monotonicity along nested mode
subsets, the ellipticity constant against the mode-number operator, exact
1/L self-similarity and convergence in the degree cutoff.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from ymgap.app.fock import FockOperator, enumerate_basis
from ymgap.app.models import OrderingTag, RunConfig, SolverError
from ymgap.app.quantize import galerkin_compress, quantize
from ymgap.app.symbols import PolySymbol
from ymgap.app.yangmills import (
    ModeBasis,
    build_mode_basis,
    energy_polynomial,
    make_algebra,
    number_polynomial,
)

logger = logging.getLogger(__name__)

DENSE_THRESHOLD = 1500
RESIDUAL_RTOL = 1e-8
MONOTONE_SLACK = 1e-9
SCALING_RTOL = 1e-8


@dataclass
class EigenResult:
    """
    Smallest eigenpairs of a Hermitian operator.

    Attributes:
        values: Ascending eigenvalues
        residuals: ||Q v - lambda v|| for each pair
        solver: "dense" or "iterative"
        norm: Norm estimate the residuals are measured against
    """
    values: np.ndarray
    residuals: np.ndarray
    solver: str
    norm: float

    def max_relative_residual(self) -> float:
        if self.residuals.size == 0:
            return 0.0
        return float(self.residuals.max() / max(self.norm, 1.0))


def _real_if_possible(Q: FockOperator):
    matrix = Q.matrix
    if matrix.nnz == 0 or not np.any(matrix.data.imag):
        return matrix.real.tocsr()
    return matrix


def eigen_smallest(
    Q: FockOperator, k: int, dense_threshold: int = DENSE_THRESHOLD
) -> EigenResult:
    """
    The k smallest eigenvalues of a Hermitian operator.

    Dense LAPACK below dense_threshold, restarted Lanczos (ARPACK) above it.

    Args:
        Q: Operator flagged hermitian
        k: Number of eigenvalues, clipped to the basis dimension
        dense_threshold: Largest dimension handled densely

    Returns:
        EigenResult with ascending values and per-pair residuals

    Raises:
        ValueError: If Q is not flagged hermitian or k < 1
        SolverError: If the iterative solver does not converge, or if either
            solver misses the residual bound
    """
    if not Q.hermitian:
        raise ValueError("eigen_smallest needs an operator flagged hermitian")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    dim = Q.dim
    k = min(k, dim)
    matrix = _real_if_possible(Q)
    norm = Q.norm_estimate()

    if dim <= dense_threshold or k >= dim - 1:
        values, vectors = scipy.linalg.eigh(matrix.toarray(), subset_by_index=[0, k - 1])
        solver = "dense"
    else:
        v0 = np.random.default_rng(0).standard_normal(dim)
        try:
            values, vectors = spla.eigsh(matrix, k=k, which="SA", v0=v0, tol=0.0)
        except spla.ArpackNoConvergence as exc:
            partial = _residuals(matrix, exc.eigenvalues, exc.eigenvectors)
            achieved = float(partial.max()) if partial.size else float("inf")
            raise SolverError(
                f"Lanczos did not converge for {k} eigenvalues (dim {dim}); "
                f"best residual {achieved:.3e}",
                residual=achieved,
            ) from exc
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        solver = "iterative"

    residuals = _residuals(matrix, values, vectors)
    result = EigenResult(np.asarray(values, dtype=float), residuals, solver, norm)
    bound = RESIDUAL_RTOL * max(norm, 1.0)
    if residuals.size and residuals.max() > bound:
        raise SolverError(
            f"{solver.capitalize()} eigen residual {residuals.max():.3e} exceeds {bound:.3e} (dim {dim})",
            residual=float(residuals.max()),
        )
    logger.debug("eigen_smallest: dim=%d k=%d solver=%s", dim, k, solver)
    return result


def _residuals(matrix, values, vectors) -> np.ndarray:
    if values is None or vectors is None or len(values) == 0:
        return np.zeros(0)
    applied = matrix @ vectors
    return np.linalg.norm(applied - vectors * np.asarray(values)[np.newaxis, :], axis=0)


@dataclass
class SpectrumReport:
    """
    Eigenvalue table of one truncation with the metadata needed to reproduce it.
    """
    eigenvalues: List[float]
    residuals: List[float]
    n_modes: int
    D: int
    kmax: int
    L: float
    algebra: str
    ordering: str
    form: str
    basis_dim: int
    solver: str
    timings: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(b < a for a, b in zip(self.eigenvalues, self.eigenvalues[1:])):
            raise ValueError("Eigenvalues of a SpectrumReport must be ascending")

    @property
    def gap_bottom(self) -> float:
        """lambda_1, the bottom of the spectrum."""
        return self.eigenvalues[0]

    @property
    def gap_first(self) -> Optional[float]:
        """lambda_2 - lambda_1, None when only one eigenvalue was computed."""
        if len(self.eigenvalues) < 2:
            return None
        return self.eigenvalues[1] - self.eigenvalues[0]

    def metadata(self) -> Dict[str, object]:
        return {
            "n_modes": self.n_modes,
            "D": self.D,
            "kmax": self.kmax,
            "L": self.L,
            "algebra": self.algebra,
            "ordering": self.ordering,
            "form": self.form,
            "basis_dim": self.basis_dim,
            "solver": self.solver,
        }

    def rows(self) -> List[Dict[str, object]]:
        """One row per eigenvalue with the full metadata columns."""
        meta = self.metadata()
        return [
            {"n": n + 1, "eigenvalue": value, "residual": residual, **meta}
            for n, (value, residual) in enumerate(zip(self.eigenvalues, self.residuals))
        ]


@dataclass
class ResultTable:
    """
    Rows of a sweep experiment plus its acceptance verdict.

    Attributes:
        columns: Column order for CSV output
        rows: One dict per row
        passed: Verdict of the experiment's check, None when it has none
        summary: Scalar figures printed by the CLI
    """
    columns: List[str]
    rows: List[Dict[str, object]]
    passed: Optional[bool] = None
    summary: Dict[str, float] = field(default_factory=dict)


def _config_modes(config: RunConfig, L: Optional[float] = None) -> ModeBasis:
    algebra = make_algebra(config.algebra)
    modes = build_mode_basis(config.L if L is None else L, config.kmax, algebra)
    if config.modes is not None:
        modes = modes.subset(config.modes)
    return modes


def _spectrum_of(
    poly: PolySymbol, modes: ModeBasis, D: int, config: RunConfig, timings: Dict[str, float]
) -> SpectrumReport:
    start = time.perf_counter()
    basis = enumerate_basis(modes.n_modes, D)
    operator = quantize(poly, OrderingTag.ANTINORMAL, basis)
    timings["quantize"] = time.perf_counter() - start

    start = time.perf_counter()
    eig = eigen_smallest(operator, config.k_eigs, config.dense_threshold)
    timings["eigensolve"] = time.perf_counter() - start

    return SpectrumReport(
        eigenvalues=[float(v) for v in eig.values],
        residuals=[float(r) for r in eig.residuals],
        n_modes=modes.n_modes,
        D=D,
        kmax=modes.kmax,
        L=modes.L,
        algebra=modes.algebra.name,
        ordering=OrderingTag.ANTINORMAL.value,
        form=config.form.value,
        basis_dim=basis.dim,
        solver=eig.solver,
        timings=dict(timings),
    )


def ym_spectrum(config: RunConfig, L: Optional[float] = None, D: Optional[int] = None) -> SpectrumReport:
    """
    Energy polynomial -> anti-normal quantization -> smallest eigenvalues.

    Args:
        config: Run configuration (algebra, L, kmax, D, k_eigs, form, modes)
        L: Override of config.L
        D: Override of config.D

    Returns:
        SpectrumReport with metadata and timings
    """
    timings: Dict[str, float] = {}
    start = time.perf_counter()
    modes = _config_modes(config, L)
    poly = energy_polynomial(modes, config.form)
    timings["assemble"] = time.perf_counter() - start
    report = _spectrum_of(poly, modes, config.D if D is None else D, config, timings)
    logger.info(
        "Spectrum %s kmax=%d D=%d L=%g: lambda_1=%.10g",
        report.algebra,
        report.kmax,
        report.D,
        report.L,
        report.gap_bottom,
    )
    return report


def _check_nested(subsets: Sequence[Sequence[int]]) -> None:
    for smaller, larger in zip(subsets, subsets[1:]):
        if not set(smaller) <= set(larger):
            raise ValueError(f"Mode subsets are not nested: {list(smaller)} is not inside {list(larger)}")


def galerkin_monotonicity(config: RunConfig, subsets: Sequence[Sequence[int]]) -> ResultTable:
    """
    Eigenvalues of compressions onto nested mode subsets.

    Compressions onto a growing subspace can only lower each lambda_n
    (min-max), so along the list every column must be nonincreasing within
    1e-9.

    Args:
        config: Run configuration; mode indices refer to its full mode basis
        subsets: Nested subsets, smallest first

    Returns:
        ResultTable with one row per (subset, n)
    """
    if not subsets:
        raise ValueError("galerkin_monotonicity needs at least one subset")
    _check_nested(subsets)
    algebra = make_algebra(config.algebra)
    full = build_mode_basis(config.L, config.kmax, algebra)
    largest = list(subsets[-1])
    modes = full.subset(largest)
    poly = energy_polynomial(modes, config.form)
    operator = quantize(poly, OrderingTag.ANTINORMAL, enumerate_basis(modes.n_modes, config.D))

    spectra: List[np.ndarray] = []
    rows: List[Dict[str, object]] = []
    for index, subset in enumerate(subsets):
        positions = [largest.index(m) for m in subset]
        compressed = galerkin_compress(operator, positions)
        values = eigen_smallest(compressed, config.k_eigs, config.dense_threshold).values
        spectra.append(values)
        label = ",".join(str(m) for m in subset)
        for n, value in enumerate(values):
            rows.append(
                {"subset": index, "modes": label, "n_vars": len(subset), "n": n + 1, "eigenvalue": float(value)}
            )

    worst = 0.0
    for smaller, larger in zip(spectra, spectra[1:]):
        common = min(len(smaller), len(larger))
        if common:
            worst = max(worst, float(np.max(larger[:common] - smaller[:common])))
    passed = worst <= MONOTONE_SLACK
    logger.info("Galerkin monotonicity over %d subsets: worst increase %.3e", len(subsets), worst)
    return ResultTable(
        columns=["subset", "modes", "n_vars", "n", "eigenvalue"],
        rows=rows,
        passed=passed,
        summary={"worst_increase": worst},
    )


def ellipticity_constant(
    M: FockOperator,
    N: FockOperator,
    tol: float = 1e-9,
    rtol: float = 1e-10,
    c_max: float = 1e12,
    dense_threshold: int = DENSE_THRESHOLD,
) -> float:
    """
    Largest C >= 0 with min-eig(M - C N) >= -tol, found by bisection.

    Args:
        M: Hermitian operator
        N: Hermitian operator on the same basis
        tol: Allowed negative slack of the minimum eigenvalue
        rtol: Relative width at which the bisection stops
        c_max: Give up doubling the bracket beyond this value

    Returns:
        The certified constant, 0.0 if no positive C certifies
    """
    if not (M.hermitian and N.hermitian):
        raise ValueError("ellipticity_constant needs operators flagged hermitian")
    if M.basis.dim != N.basis.dim or M.basis.n_modes != N.basis.n_modes:
        raise ValueError(f"Operators live on different bases: {M.basis!r} vs {N.basis!r}")

    def certified(c: float) -> bool:
        shifted = M - N.scaled(c)
        return eigen_smallest(shifted, 1, dense_threshold).values[0] >= -tol

    if not certified(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while certified(hi):
        lo, hi = hi, 2.0 * hi
        if hi > c_max:
            logger.warning("Ellipticity bracket exceeded %g; returning the lower end", c_max)
            return lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if certified(mid):
            lo = mid
        else:
            hi = mid
    logger.debug("Ellipticity constant %.12g", lo)
    return lo


def ym_ellipticity(config: RunConfig) -> ResultTable:
    """
    Ellipticity constant of the anti-normal Yang-Mills energy against the
    anti-normal mode-number operator sum z*_m z_m.
    """
    modes = _config_modes(config)
    basis = enumerate_basis(modes.n_modes, config.D)
    M = quantize(energy_polynomial(modes, config.form), OrderingTag.ANTINORMAL, basis)
    N = quantize(number_polynomial(modes), OrderingTag.ANTINORMAL, basis)
    constant = ellipticity_constant(M, N, dense_threshold=config.dense_threshold)
    row = {
        "constant": constant,
        "n_modes": modes.n_modes,
        "D": config.D,
        "kmax": config.kmax,
        "L": modes.L,
        "algebra": modes.algebra.name,
        "basis_dim": basis.dim,
    }
    return ResultTable(
        columns=list(row), rows=[row], passed=constant > 0, summary={"constant": constant}
    )


def scaling_study(config: RunConfig, L_list: Sequence[float]) -> ResultTable:
    """
    Rows lambda_n(L) * L for every box size; constant across L under the
    scale-covariant complexification.

    Returns:
        ResultTable with columns L, n, eigenvalue, scaled; the summary holds
        the largest relative deviation of a scaled column from its first entry
    """
    if not L_list:
        raise ValueError("scaling_study needs at least one box size")
    rows: List[Dict[str, object]] = []
    scaled: List[np.ndarray] = []
    for L in sorted(L_list):
        report = ym_spectrum(config, L=L)
        values = np.array(report.eigenvalues)
        scaled.append(values * L)
        for n, value in enumerate(values):
            rows.append({"L": L, "n": n + 1, "eigenvalue": float(value), "scaled": float(value * L)})
    reference = scaled[0]
    deviation = 0.0
    for current in scaled[1:]:
        deviation = max(
            deviation,
            float(np.max(np.abs(current - reference) / np.maximum(np.abs(reference), 1e-300))),
        )
    logger.info("Scaling study over L=%s: max relative deviation %.3e", list(L_list), deviation)
    return ResultTable(
        columns=["L", "n", "eigenvalue", "scaled"],
        rows=rows,
        passed=deviation <= SCALING_RTOL,
        summary={"max_deviation": deviation},
    )


def degree_convergence(config: RunConfig, D_list: Sequence[int]) -> ResultTable:
    """
    Eigenvalues for increasing degree cutoffs with successive relative changes.

    Compressions onto nested degree blocks, so each lambda_n can only move
    down as D grows.
    """
    if not D_list:
        raise ValueError("degree_convergence needs at least one degree cutoff")
    modes = _config_modes(config)
    poly = energy_polynomial(modes, config.form)
    rows: List[Dict[str, object]] = []
    previous: Optional[np.ndarray] = None
    last_delta = float("nan")
    for D in sorted(D_list):
        report = _spectrum_of(poly, modes, D, config, {})
        values = np.array(report.eigenvalues)
        for n, value in enumerate(values):
            delta = None
            if previous is not None and n < len(previous):
                delta = float(abs(previous[n] - value) / max(abs(value), 1e-300))
            rows.append(
                {"D": D, "basis_dim": report.basis_dim, "n": n + 1, "eigenvalue": float(value), "rel_change": delta}
            )
        if previous is not None:
            common = min(len(previous), len(values), 2)
            last_delta = float(np.max(np.abs(previous[:common] - values[:common]) / np.abs(values[:common])))
        previous = values
    return ResultTable(
        columns=["D", "basis_dim", "n", "eigenvalue", "rel_change"],
        rows=rows,
        passed=None,
        summary={"last_rel_change": last_delta},
    )


def oscillator_levels(wavevector: Tuple[int, int, int], L: float, n_levels: int) -> np.ndarray:
    """
    Closed-form anti-normal spectrum of one abelian transverse mode.

    lambda_n = w (n + 1/2) + (w^2 L + 1/L) / 4 with w = 2 pi |m| / L.
    """
    omega = 2.0 * np.pi * float(np.linalg.norm(wavevector)) / L
    n = np.arange(n_levels)
    return omega * (n + 0.5) + 0.25 * (omega**2 * L + 1.0 / L)
