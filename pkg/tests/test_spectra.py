"""Tests for eigen extraction and the spectral experiments."""
import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from ymgap.app.fock import FockOperator, creation_matrix, enumerate_basis, number_operator
from ymgap.app.models import AlgebraName, RunConfig, SolverError, Subcommand
from ymgap.app.spectra import (
    SpectrumReport,
    degree_convergence,
    eigen_smallest,
    ellipticity_constant,
    galerkin_monotonicity,
    oscillator_levels,
    scaling_study,
    ym_ellipticity,
    ym_spectrum,
)
from ymgap.app.yangmills import build_mode_basis, su2_algebra


def su2_config(**overrides) -> RunConfig:
    values = dict(subcommand=Subcommand.SPECTRUM, algebra=AlgebraName.SU2, L=1.0, kmax=0, D=3, k_eigs=3)
    values.update(overrides)
    return RunConfig(**values)


class TestEigenSmallest:
    def test_dense_and_iterative_agree(self):
        basis = enumerate_basis(1, 59)
        diagonal = np.sqrt(np.arange(1.0, basis.dim + 1))
        Q = FockOperator(basis, sp.diags(diagonal, format="csr"), hermitian=True)
        dense = eigen_smallest(Q, 4)
        iterative = eigen_smallest(Q, 4, dense_threshold=10)
        assert dense.solver == "dense" and iterative.solver == "iterative"
        assert np.allclose(dense.values, diagonal[:4])
        assert np.allclose(iterative.values, diagonal[:4], atol=1e-10)
        assert dense.max_relative_residual() < 1e-12

    def test_k_is_clipped_to_dimension(self):
        values = eigen_smallest(number_operator(enumerate_basis(1, 2)), 10).values
        assert np.allclose(values, [0.0, 1.0, 2.0])

    def test_dense_residual_failure_raises(self, monkeypatch):
        exact = scipy.linalg.eigh

        def shifted(matrix, **kwargs):
            values, vectors = exact(matrix, **kwargs)
            return values + 0.5, vectors

        monkeypatch.setattr(scipy.linalg, "eigh", shifted)
        with pytest.raises(SolverError) as excinfo:
            eigen_smallest(number_operator(enumerate_basis(1, 4)), 2)
        assert excinfo.value.residual == pytest.approx(0.5)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            eigen_smallest(creation_matrix(enumerate_basis(1, 3), 0), 1)


class TestSpectrum:
    def test_report_metadata_and_gaps(self):
        report = ym_spectrum(su2_config())
        assert report.n_modes == 9 and report.basis_dim == 220
        assert report.ordering == "antinormal"
        assert report.gap_bottom == report.eigenvalues[0] > 0
        assert report.gap_first == pytest.approx(report.eigenvalues[1] - report.eigenvalues[0])
        rows = report.rows()
        assert [row["n"] for row in rows] == [1, 2, 3]
        assert {"eigenvalue", "residual", "algebra", "kmax", "D", "L"} <= set(rows[0])

    def test_report_must_be_ascending(self):
        with pytest.raises(ValueError):
            SpectrumReport([2.0, 1.0], [0.0, 0.0], 1, 1, 0, 1.0, "su2", "antinormal", "noether", 2, "dense")

    def test_abelian_single_mode_oscillator(self):
        config = su2_config(algebra=AlgebraName.ABELIAN, kmax=1, D=120, k_eigs=4, modes=[3])
        report = ym_spectrum(config)
        wavevector = build_mode_basis(1.0, 1, su2_algebra()).modes[3].wavevector
        expected = oscillator_levels(wavevector, 1.0, 4)
        assert np.allclose(report.eigenvalues, expected, rtol=1e-6)

    def test_oscillator_levels(self):
        levels = oscillator_levels((0, 0, 1), 2.0, 3)
        omega = np.pi
        assert levels[0] == pytest.approx(omega / 2 + (omega**2 * 2.0 + 0.5) / 4)
        assert np.allclose(np.diff(levels), omega)


class TestStudies:
    def test_scaling_is_exact(self):
        table = scaling_study(su2_config(subcommand=Subcommand.SCALING), [1.0, 2.0, 4.0])
        assert table.passed
        assert table.summary["max_deviation"] <= 1e-8
        assert len(table.rows) == 9

    def test_galerkin_monotonicity_over_colors(self):
        modes = build_mode_basis(1.0, 0, su2_algebra())
        subsets = [modes.color_subset([0]), modes.color_subset([0, 1]), modes.color_subset([0, 1, 2])]
        table = galerkin_monotonicity(su2_config(subcommand=Subcommand.CONVERGE), subsets)
        assert table.passed
        assert table.summary["worst_increase"] <= 1e-9

    def test_identical_subsets_give_identical_rows(self):
        subset = [0, 1, 2, 3]
        table = galerkin_monotonicity(su2_config(subcommand=Subcommand.CONVERGE), [subset, subset])
        first = [row["eigenvalue"] for row in table.rows if row["subset"] == 0]
        second = [row["eigenvalue"] for row in table.rows if row["subset"] == 1]
        assert first == pytest.approx(second, abs=1e-12)

    def test_subsets_must_be_nested(self):
        with pytest.raises(ValueError):
            galerkin_monotonicity(su2_config(), [[0, 1], [2, 3]])

    def test_degree_convergence_is_monotone(self):
        table = degree_convergence(su2_config(subcommand=Subcommand.CONVERGE, k_eigs=2), [2, 3, 4])
        by_degree = {}
        for row in table.rows:
            by_degree.setdefault(row["n"], []).append(row["eigenvalue"])
        for values in by_degree.values():
            assert np.all(np.diff(values) <= 1e-9)
        assert table.summary["last_rel_change"] >= 0


class TestEllipticity:
    def test_operator_against_itself(self):
        N = number_operator(enumerate_basis(2, 4))
        assert ellipticity_constant(N, N) == pytest.approx(1.0, abs=1e-6)

    def test_shifted_operator(self):
        D = 4
        N = number_operator(enumerate_basis(2, D))
        M = N.scaled(2.0).shifted(1.0)
        assert ellipticity_constant(M, N) == pytest.approx(2.0 + 1.0 / D, abs=1e-6)

    def test_indefinite_operator_gives_zero(self):
        N = number_operator(enumerate_basis(1, 3))
        assert ellipticity_constant(N.shifted(-1.0), N) == 0.0

    def test_yang_mills_constant_is_positive(self):
        table = ym_ellipticity(su2_config(subcommand=Subcommand.ELLIPTICITY))
        assert table.passed
        assert table.rows[0]["constant"] > 0


@pytest.mark.slow
class TestAcceptanceScale:
    def test_lowest_levels_settle_between_largest_degrees(self):
        config = su2_config(subcommand=Subcommand.CONVERGE, k_eigs=2)
        table = degree_convergence(config, [5, 6])
        assert table.summary["last_rel_change"] < 0.05
        top = [row["eigenvalue"] for row in table.rows if row["D"] == 6]
        assert table.rows[-1]["basis_dim"] == 5005
        assert top[0] > 0
        assert top[1] - top[0] > 0

    def test_large_spectrum_uses_lanczos(self):
        report = ym_spectrum(su2_config(D=6, k_eigs=4))
        assert report.basis_dim == 5005
        assert report.solver == "iterative"
        assert min(report.eigenvalues) >= -1e-9
        assert report.gap_first > 0
