"""
Classical Yang-Mills evolution in temporal gauge.

First-order system on a spectral periodic lattice:

    dA_k/dt = E_k
    dE_k/dt = sum_j d_j F_jk - [A_j, F_jk]
    F_jk    = d_j A_k - d_k A_j - [A_j, A_k]

integrated with explicit RK4. The Gauss constraint div E - [A; E] = 0 is
measured along the trajectory, never enforced.
"""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ymgap.app.models import NonFiniteStateError
from ymgap.app.yangmills import (
    GaugeAlgebra,
    LatticeField,
    build_mode_basis,
    check_compatible,
    gauged_div,
    grid_coordinates,
    spectral_derivative,
)

logger = logging.getLogger(__name__)


@dataclass
class FieldState:
    """
    Cauchy data (A, E) at time t on a shared lattice.
    """
    t: float
    A: LatticeField
    E: LatticeField

    def __post_init__(self):
        check_compatible(self.A, self.E)
        if not (self.A.is_vector and self.E.is_vector):
            raise ValueError("A and E must both be vector fields")

    @property
    def algebra(self) -> GaugeAlgebra:
        return self.A.algebra

    def is_finite(self) -> bool:
        return self.A.is_finite() and self.E.is_finite()


def curvature(A: LatticeField) -> np.ndarray:
    """
    Field strength F[j, k] = d_j A_k - d_k A_j - [A_j, A_k].

    Returns:
        Array (3, 3, dim, N, N, N), antisymmetric in the first two axes
    """
    dim, N = A.algebra.dim, A.N
    derivs = [[spectral_derivative(A.values[k], j, A.L) for k in range(3)] for j in range(3)]
    F = np.zeros((3, 3, dim, N, N, N))
    for j in range(3):
        for k in range(j + 1, 3):
            value = derivs[j][k] - derivs[k][j] - A.algebra.bracket(A.values[j], A.values[k])
            F[j, k] = value
            F[k, j] = -value
    return F


def ym_rhs(state: FieldState) -> Tuple[LatticeField, LatticeField]:
    """
    Time derivative (dA/dt, dE/dt) of the Schwinger first-order system.
    """
    A = state.A
    F = curvature(A)
    dE = np.zeros_like(A.values)
    for k in range(3):
        for j in range(3):
            if j == k:
                continue
            dE[k] += spectral_derivative(F[j, k], j, A.L)
            dE[k] -= A.algebra.bracket(A.values[j], F[j, k])
    return state.E.like(state.E.values.copy()), A.like(dE)


def rk4_step(state: FieldState, dt: float) -> FieldState:
    """
    One classical fourth-order Runge-Kutta step.

    Raises:
        ValueError: If dt is not positive
        NonFiniteStateError: If the new state contains NaN or Inf
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    def shifted(base: FieldState, slope: Tuple[LatticeField, LatticeField], h: float) -> FieldState:
        return FieldState(base.t + h, base.A + slope[0] * h, base.E + slope[1] * h)

    k1 = ym_rhs(state)
    k2 = ym_rhs(shifted(state, k1, dt / 2))
    k3 = ym_rhs(shifted(state, k2, dt / 2))
    k4 = ym_rhs(shifted(state, k3, dt))
    weight = dt / 6.0
    A = state.A + (k1[0] + k2[0] * 2.0 + k3[0] * 2.0 + k4[0]) * weight
    E = state.E + (k1[1] + k2[1] * 2.0 + k3[1] * 2.0 + k4[1]) * weight
    new_state = FieldState(state.t + dt, A, E)
    if not new_state.is_finite():
        raise NonFiniteStateError(f"Non-finite field values after step to t={new_state.t:.6g}")
    return new_state


def constraint_residual(state: FieldState) -> float:
    """L^2 norm of the gauged divergence div E - [A; E]."""
    return gauged_div(state.A, state.E).norm()


def total_energy(state: FieldState) -> float:
    """(1/2) integral of E . E + (1/2) F_jk F_jk by lattice quadrature."""
    F = curvature(state.A)
    cell = state.A.cell_volume
    electric = float(np.sum(state.E.values**2)) * cell
    magnetic = 0.5 * float(np.sum(F**2)) * cell
    return 0.5 * (electric + magnetic)


def zero_state(N: int, L: float, algebra: GaugeAlgebra) -> FieldState:
    return FieldState(0.0, LatticeField.zeros(N, L, algebra), LatticeField.zeros(N, L, algebra))


def plane_wave_state(
    N: int,
    L: float,
    algebra: GaugeAlgebra,
    amplitude: float = 0.1,
    harmonic: int = 1,
    color: int = 0,
    t: float = 0.0,
) -> FieldState:
    """
    Standing transverse wave A_y = amp cos(k x) cos(|k| t) in one color.

    At t = 0 the electric field vanishes; for an abelian algebra the returned
    state is the exact solution at time t.
    """
    if not 0 <= color < algebra.dim:
        raise ValueError(f"Color {color} out of range for {algebra.name}")
    k = 2.0 * np.pi * harmonic / L
    x = grid_coordinates(N, L)[0]
    A = LatticeField.zeros(N, L, algebra)
    E = LatticeField.zeros(N, L, algebra)
    A.values[1, color] = amplitude * np.cos(k * x) * np.cos(abs(k) * t)
    E.values[1, color] = -amplitude * abs(k) * np.cos(k * x) * np.sin(abs(k) * t)
    return FieldState(t, A, E)


def random_state(
    N: int,
    L: float,
    algebra: GaugeAlgebra,
    seed: int = 0,
    amplitude: float = 0.1,
    kmax: int = 1,
) -> FieldState:
    """
    Smooth random transverse A with E = 0, so the Gauss constraint holds exactly.

    Coefficients are drawn from a seeded normal distribution over the
    divergence-free modes with |m|_inf <= kmax.
    """
    if 2 * kmax >= N // 2:
        raise ValueError(f"Grid N={N} too coarse for kmax={kmax} data")
    modes = build_mode_basis(L, kmax, algebra)
    rng = np.random.default_rng(seed)
    coefficients = amplitude * rng.standard_normal(modes.n_modes)
    A = modes.reconstruct(coefficients, N)
    return FieldState(0.0, A, LatticeField.zeros(N, L, algebra))


def evolve(
    state: FieldState,
    dt: float,
    t_end: float,
    record_every: int = 10,
) -> Tuple[FieldState, List[Dict[str, float]]]:
    """
    Integrate with RK4 and record diagnostics.

    Args:
        state: Initial data
        dt: Step size
        t_end: Final time measured from state.t
        record_every: Record a row every this many steps (first and last always)

    Returns:
        Tuple of (final_state, rows) where each row has keys t, energy,
        constraint_residual
    """
    n_steps = int(round(t_end / dt))
    if n_steps < 1 or abs(n_steps * dt - t_end) > 1e-9 * max(t_end, 1.0):
        raise ValueError(f"t_end={t_end} is not a positive multiple of dt={dt}")

    def row(s: FieldState) -> Dict[str, float]:
        return {
            "t": s.t,
            "energy": total_energy(s),
            "constraint_residual": constraint_residual(s),
        }

    rows = [row(state)]
    for step in range(1, n_steps + 1):
        state = rk4_step(state, dt)
        if step % record_every == 0 or step == n_steps:
            rows.append(row(state))
            logger.debug("step %d/%d t=%.4f energy=%.12g", step, n_steps, state.t, rows[-1]["energy"])
    logger.info(
        "Evolved %d steps to t=%.4g: relative energy drift %.3e",
        n_steps,
        state.t,
        relative_drift([r["energy"] for r in rows]),
    )
    return state, rows


def relative_drift(energies: Sequence[float]) -> float:
    """max |E(t) - E(0)| / |E(0)| over a trajectory (absolute when E(0) = 0)."""
    energies = np.asarray(energies, dtype=float)
    scale = abs(energies[0]) or 1.0
    return float(np.max(np.abs(energies - energies[0])) / scale)


def max_field_error(state: FieldState, reference: FieldState) -> float:
    """L-infinity distance between the A fields of two states."""
    check_compatible(state.A, reference.A)
    return float(np.max(np.abs(state.A.values - reference.A.values)))


TRAJECTORY_COLUMNS = ("t", "energy", "constraint_residual")


def write_trajectory_csv(rows: Sequence[Dict[str, float]], path: Path, append: bool = False) -> Path:
    """
    Write trajectory diagnostics as CSV with columns t, energy, constraint_residual.

    Args:
        rows: Rows returned by evolve
        path: Output file
        append: Append to an existing file instead of overwriting; the header
            is written only when the file is new or empty

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_header = not append or not path.exists() or path.stat().st_size == 0
    with open(path, "a" if append else "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if write_header:
            writer.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(row[column])) for column in TRAJECTORY_COLUMNS])
    logger.debug("Wrote %d trajectory rows to %s", len(rows), path)
    return path
