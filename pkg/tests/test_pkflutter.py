import numpy as np
import pytest
import scipy.linalg

from flutterkit.fixtures import fixture_geometry, fixture_targets
from flutterkit.pkflutter import (
    OnsetReport,
    PkSolution,
    SpeedGrid,
    detect_onset,
    export_trajectories,
    pk_at_speed,
    refine_onset,
    sweep,
)
from flutterkit.wingmodel import (
    ModalTargets,
    assemble_inertia,
    calibrate_stiffness,
    damping_matrix,
    stiffness_matrix,
    still_air_modes,
)

GEOM = fixture_geometry()
TARGETS = fixture_targets(1, "n4sid")
STIFF = calibrate_stiffness(TARGETS, GEOM)
A_M = assemble_inertia(GEOM)
E_STIFF = stiffness_matrix(GEOM, STIFF)
OMEGA, PHI = still_air_modes(A_M, E_STIFF)
D_MAT = damping_matrix(PHI, TARGETS)


def still_air_eigenvalues(d_matrix):
    """Independent route: companion eigenvalues of a s^2 + d s + e = 0."""
    n = A_M.shape[0]
    comp = np.zeros((2 * n, 2 * n))
    comp[:n, n:] = np.eye(n)
    comp[n:, :n] = -np.linalg.solve(A_M, E_STIFF)
    comp[n:, n:] = -np.linalg.solve(A_M, d_matrix)
    lam = scipy.linalg.eigvals(comp)
    lam = lam[lam.imag > 0]
    return lam[np.argsort(lam.imag)]


class TestStillAir:
    def test_matches_quadratic_eigenproblem(self):
        lam, k, _, conv = pk_at_speed(GEOM, STIFF, D_MAT, 0.0)
        expected = still_air_eigenvalues(D_MAT)
        assert np.all(conv)
        assert np.allclose(np.sort_complex(lam), np.sort_complex(expected),
                           atol=1e-10)

    def test_matches_modal_closed_form(self):
        lam, *_ = pk_at_speed(GEOM, STIFF, D_MAT, 0.0)
        zeta = (TARGETS.bending_zeta, TARGETS.torsion_zeta)
        for i, (z, w) in enumerate(zip(zeta, OMEGA)):
            assert lam[i].real == pytest.approx(-z * w, rel=1e-8)
            assert abs(lam[i].imag) == pytest.approx(w * np.sqrt(1 - z * z),
                                                     rel=1e-8)

    def test_undamped_is_purely_imaginary(self):
        lam, *_ = pk_at_speed(GEOM, STIFF, np.zeros((2, 2)), 0.0)
        assert np.allclose(lam.real, 0.0, atol=1e-10)
        assert np.allclose(np.sort(np.abs(lam.imag)), OMEGA, rtol=1e-10)


@pytest.fixture(scope="module")
def solution():
    return sweep(GEOM, STIFF, D_MAT)


class TestSweep:
    def test_shapes_and_convergence(self, solution):
        n = len(solution.speeds)
        assert solution.lam.shape == (n, 2)
        assert np.all(solution.converged)
        assert np.all(solution.iterations >= 1)
        assert solution.speeds[0] == 0.0
        assert solution.speeds[-1] == pytest.approx(28.0)

    def test_reduced_frequency_identity(self, solution):
        # k = |Im lam| * chord / (2 U) wherever airspeed is nonzero
        U = solution.speeds[1:, None]
        k = solution.k_red[1:]
        target = np.abs(solution.lam[1:].imag) * GEOM.chord_m / (2 * U)
        assert np.all(np.abs(k - target) <= 1e-6 * np.maximum(k, 1e-12))

    def test_still_air_k_is_nan(self, solution):
        assert np.all(np.isnan(solution.k_red[0]))

    def test_trajectories_continuous(self, solution):
        dU = np.diff(solution.speeds)[0]
        jumps = np.abs(np.diff(solution.lam, axis=0))
        assert np.max(jumps) < 20.0 * dU

    def test_degenerate_grid_equals_still_air(self):
        sol = sweep(GEOM, STIFF, D_MAT, SpeedGrid(np.array([0.0])))
        expected = still_air_eigenvalues(D_MAT)
        assert np.allclose(np.sort_complex(sol.lam[0]),
                           np.sort_complex(expected), atol=1e-10)


class TestOnset:
    def test_detects_flutter_bracket(self, solution):
        report = detect_onset(solution)
        assert report.flutter_speed_ms is not None
        lo, hi = report.flutter_bracket
        assert hi - lo == pytest.approx(0.25)
        assert 23.0 < report.flutter_speed_ms < 24.5
        assert report.critical_mode_index in (0, 1)

    def test_no_crossing_below_onset(self):
        sol = sweep(GEOM, STIFF, D_MAT,
                    SpeedGrid(np.arange(0.0, 10.0 + 1e-9, 0.5)))
        report = detect_onset(sol)
        assert report.flutter_speed_ms is None
        assert report.flutter_bracket is None

    def test_degenerate_positive_real_part_at_rest(self):
        lam = np.array([[0.1 + 20j, -1 + 70j], [0.2 + 20j, -1 + 70j]])
        sol = PkSolution(np.array([0.0, 1.0]), lam,
                         np.full((2, 2), np.nan), np.ones((2, 2), int),
                         np.ones((2, 2), bool), GEOM.chord_m)
        report = detect_onset(sol)
        assert report.flutter_speed_ms == 0.0
        assert any("degenerate" in note for note in report.notes)

    def test_refine_frozen_value(self, solution):
        report = detect_onset(solution)
        speed = refine_onset(GEOM, STIFF, D_MAT, report.flutter_bracket)
        assert speed == pytest.approx(23.5352, abs=5e-3)
        lo, hi = report.flutter_bracket
        assert lo <= speed <= hi

    def test_refine_rejects_bad_bracket(self):
        with pytest.raises(ValueError):
            refine_onset(GEOM, STIFF, D_MAT, (0.0, 1.0))

    def test_refine_zero_width_bracket(self):
        assert refine_onset(GEOM, STIFF, D_MAT, (23.53, 23.53)) == 23.53

    def test_zero_structural_damping_lowers_onset(self):
        targets0 = ModalTargets(TARGETS.bending_hz, TARGETS.torsion_hz,
                                0.0, 0.0)
        d0 = damping_matrix(PHI, targets0)
        sol = sweep(GEOM, STIFF, d0)
        report = detect_onset(sol)
        undamped = refine_onset(GEOM, STIFF, d0, report.flutter_bracket)
        assert undamped < 23.5352


class TestExport:
    def test_csv_layout(self, tmp_path):
        sol = sweep(GEOM, STIFF, D_MAT,
                    SpeedGrid(np.arange(0.0, 2.0 + 1e-9, 1.0)))
        path = tmp_path / "traj.csv"
        export_trajectories(sol, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "U_ms,mode,f_hz,zeta,re_lambda,im_lambda,k,converged"
        assert len(lines) == 1 + 3 * 2
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert first[6] == ""          # k undefined in still air
        assert first[7] == "1"
