"""Tests for the classical RK4 evolution and its diagnostics."""
import numpy as np
import pytest

from ymgap.app.dynamics import (
    FieldState,
    constraint_residual,
    curvature,
    evolve,
    max_field_error,
    plane_wave_state,
    random_state,
    relative_drift,
    rk4_step,
    total_energy,
    write_trajectory_csv,
    ym_rhs,
    zero_state,
)
from ymgap.app.models import NonFiniteStateError
from ymgap.app.yangmills import LatticeField, field_energy, grid_coordinates


def plane_wave_error(abelian, dt, t_end, N=8, L=1.0):
    state = plane_wave_state(N, L, abelian, amplitude=0.1)
    final, _ = evolve(state, dt, t_end, record_every=1000)
    exact = plane_wave_state(N, L, abelian, amplitude=0.1, t=t_end)
    return max_field_error(final, exact)


def test_plane_wave_follows_exact_solution(abelian):
    assert plane_wave_error(abelian, 0.01, 0.1) < 1e-8


def test_rk4_convergence_order(abelian):
    coarse = plane_wave_error(abelian, 0.05, 0.5)
    fine = plane_wave_error(abelian, 0.025, 0.5)
    assert np.log2(coarse / fine) >= 3.8


def test_energy_drift_shrinks_with_step(abelian):
    drifts = []
    for dt in (0.05, 0.025):
        _, rows = evolve(plane_wave_state(8, 1.0, abelian), dt, 1.0, record_every=1)
        drifts.append(relative_drift([row["energy"] for row in rows]))
    assert drifts[0] / drifts[1] >= 12


def test_nonabelian_energy_is_conserved(su2):
    state = random_state(8, 1.0, su2, seed=11, amplitude=0.1)
    _, rows = evolve(state, 0.01, 0.2, record_every=5)
    assert relative_drift([row["energy"] for row in rows]) <= 1e-5


@pytest.mark.slow
def test_long_nonabelian_run_conserves_energy(su2):
    state = random_state(16, 1.0, su2, seed=0, amplitude=0.1)
    _, rows = evolve(state, 1e-3, 1.0, record_every=100)
    assert relative_drift([row["energy"] for row in rows]) <= 1e-8


@pytest.mark.slow
def test_gauss_constraint_persists(su2):
    state = random_state(16, 1.0, su2, seed=3, amplitude=0.02)
    assert constraint_residual(state) == 0.0
    final, rows = evolve(state, 0.01, 1.0, record_every=10)
    assert len(rows) == 11
    assert constraint_residual(final) < 1e-6


def test_violated_constraint_is_reported(su2):
    N, L, s = 8, 2.0, 0.3
    x = grid_coordinates(N, L)[0]
    E = LatticeField.zeros(N, L, su2)
    E.values[0, 0] = s * np.sin(2 * np.pi * x / L)
    state = FieldState(0.0, LatticeField.zeros(N, L, su2), E)
    expected = s * (2 * np.pi / L) * np.sqrt(L**3 / 2)
    assert constraint_residual(state) == pytest.approx(expected, rel=1e-10)


def test_total_energy_matches_field_energy(su2):
    state = random_state(8, 1.5, su2, seed=5, amplitude=0.3)
    state = FieldState(0.0, state.A, state.A * 0.5)
    assert total_energy(state) == pytest.approx(field_energy(state.A, state.E), rel=1e-12)


def test_curvature_is_antisymmetric(su2):
    F = curvature(random_state(8, 1.0, su2, seed=2).A)
    assert F.shape == (3, 3, 3, 8, 8, 8)
    assert np.allclose(F, -F.transpose(1, 0, 2, 3, 4, 5))


def test_step_validation(abelian):
    state = plane_wave_state(8, 1.0, abelian)
    with pytest.raises(ValueError):
        rk4_step(state, 0.0)
    with pytest.raises(ValueError):
        evolve(state, 0.03, 0.1)


def test_non_finite_state_is_rejected(abelian):
    state = plane_wave_state(8, 1.0, abelian)
    state.A.values[1, 0, 0, 0, 0] = np.nan
    with pytest.raises(NonFiniteStateError):
        rk4_step(state, 0.01)


def test_random_state_is_seeded(su2):
    first = random_state(8, 1.0, su2, seed=4)
    second = random_state(8, 1.0, su2, seed=4)
    assert np.array_equal(first.A.values, second.A.values)
    with pytest.raises(ValueError):
        random_state(4, 1.0, su2, kmax=1)


def test_zero_state_is_a_fixed_point(su2):
    dA, dE = ym_rhs(zero_state(8, 1.0, su2))
    assert not dA.values.any()
    assert not dE.values.any()


def test_rhs_reduces_to_wave_equation(abelian):
    N, L, amp = 8, 1.0, 0.2
    k = 2 * np.pi / L
    x = grid_coordinates(N, L)[0]
    dA, dE = ym_rhs(plane_wave_state(N, L, abelian, amplitude=amp))
    assert np.allclose(dA.values, 0.0)
    assert np.allclose(dE.values[1, 0], -amp * k**2 * np.cos(k * x), atol=1e-10)
    assert np.allclose(dE.values[[0, 2]], 0.0, atol=1e-10)


def test_trajectory_csv(tmp_path, abelian):
    _, rows = evolve(plane_wave_state(8, 1.0, abelian), 0.05, 0.1, record_every=1)
    path = write_trajectory_csv(rows, tmp_path / "traj" / "run.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,energy,constraint_residual"
    assert len(lines) == 4

    write_trajectory_csv(rows[-1:], path, append=True)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 5
    assert lines.count("t,energy,constraint_residual") == 1
