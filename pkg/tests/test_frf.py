import numpy as np
import pytest

from flutterkit import (
    FrequencyGrid,
    FrfDataset,
    Mode,
    ModalParameterSet,
    StateSpaceRealization,
    load_frf,
    modal_to_pole,
    pole_to_modal,
    realization_to_modal,
    store_frf,
    synthesize_frf,
)

from conftest import sdof_mode


def linear_grid(lo=2.0, hi=25.0, n=256):
    return FrequencyGrid(np.linspace(lo, hi, n))


class TestFrequencyGrid:
    def test_band_and_radians(self):
        grid = linear_grid(2.0, 25.0, 64)
        assert grid.band_hz == (2.0, 25.0)
        assert np.allclose(grid.values_rad, 2 * np.pi * grid.values_hz)

    def test_rejects_non_monotonic(self):
        with pytest.raises(ValueError):
            FrequencyGrid(np.array([1.0, 3.0, 2.0]))
        with pytest.raises(ValueError):
            FrequencyGrid(np.array([1.0, 1.0, 2.0]))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            FrequencyGrid(np.array([0.0, 1.0, 2.0]))


class TestFrfDataset:
    def test_shape_contract(self):
        grid = linear_grid(n=10)
        data = FrfDataset(grid, np.zeros((3, 10), complex))
        assert data.n_channels == 3
        assert data.n_bins == 10

    def test_rejects_mismatched_columns(self):
        with pytest.raises(ValueError):
            FrfDataset(linear_grid(n=10), np.zeros((3, 5), complex))

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            FrfDataset(linear_grid(n=10), np.zeros((1, 10), complex),
                       kind="impedance")


class TestPoleConversions:
    def test_hand_values(self):
        f, zeta = pole_to_modal(-1.0 + 0.0j)
        assert f == pytest.approx(1.0 / (2 * np.pi))
        assert zeta == pytest.approx(1.0)

        f, zeta = pole_to_modal(0.0 + 10.0j)
        assert f == pytest.approx(10.0 / (2 * np.pi))
        assert zeta == 0.0

    def test_round_trip(self):
        for f, z in [(3.19, 0.032), (11.896, 0.066), (0.5, 0.5)]:
            pole = modal_to_pole(f, z)
            wn = 2 * np.pi * f
            assert pole.real == pytest.approx(-z * wn)
            assert pole.imag == pytest.approx(wn * np.sqrt(1 - z * z))
            fb, zb = pole_to_modal(pole)
            assert fb == pytest.approx(f, rel=1e-12)
            assert zb == pytest.approx(z, rel=1e-12)

    def test_mode_from_modal(self):
        mode = Mode.from_modal(5.0, 0.1, np.array([1.0, -2.0]))
        assert mode.pole == modal_to_pole(5.0, 0.1)
        assert mode.omega_d == pytest.approx(abs(mode.pole.imag))


class TestSynthesize:
    def test_matches_sdof_receptance(self):
        # a unit-shape mode is the receptance of a unit-mass oscillator
        f, zeta = 5.0, 0.07
        wn = 2 * np.pi * f
        grid = linear_grid(1.0, 20.0, 512)
        data = synthesize_frf(sdof_mode(f, zeta), grid)
        w = grid.values_rad
        expected = 1.0 / (wn**2 - w**2 + 2j * zeta * wn * w)
        assert np.allclose(data.responses[0], expected, rtol=1e-12)

    def test_resonance_peak_location(self):
        f, zeta = 3.19, 0.032
        grid = linear_grid(2.0, 25.0, 2048)
        data = synthesize_frf(sdof_mode(f, zeta), grid)
        peak_bin = int(np.argmax(np.abs(data.responses[0])))
        f_peak = f * np.sqrt(1 - 2 * zeta**2)
        assert peak_bin == int(np.argmin(np.abs(grid.values_hz - f_peak)))

    def test_columns_finite(self, planted_set):
        grid = linear_grid(n=97)
        data = synthesize_frf(planted_set, grid)
        assert data.responses.shape == (8, 97)
        assert np.all(np.isfinite(data.responses))

    def test_noise_level_and_determinism(self, planted_set):
        grid = linear_grid(n=1024)
        clean = synthesize_frf(planted_set, grid)
        noisy = synthesize_frf(planted_set, grid, noise_rms_fraction=0.01, seed=3)
        again = synthesize_frf(planted_set, grid, noise_rms_fraction=0.01, seed=3)
        other = synthesize_frf(planted_set, grid, noise_rms_fraction=0.01, seed=4)
        assert np.array_equal(noisy.responses, again.responses)
        assert not np.array_equal(noisy.responses, other.responses)
        rel = (np.linalg.norm(noisy.responses - clean.responses)
               / np.linalg.norm(clean.responses))
        assert rel == pytest.approx(0.01, rel=0.2)


class TestStoreLoad:
    def test_round_trip(self, tmp_path, planted_set):
        grid = linear_grid(n=64)
        data = synthesize_frf(planted_set, grid)
        path = tmp_path / "frf.csv"
        store_frf(data, path)
        back = load_frf(path)
        assert back.kind == data.kind
        assert back.n_channels == data.n_channels
        assert np.allclose(back.grid.values_hz, grid.values_hz, rtol=0, atol=0)
        assert np.allclose(back.responses, data.responses, rtol=0, atol=0)

    def test_parses_small_file(self, tmp_path):
        path = tmp_path / "frf.csv"
        grid = linear_grid(1.0, 10.0, 10)
        data = FrfDataset(grid, np.arange(30, dtype=float).reshape(3, 10)
                          * (1 + 1j))
        store_frf(data, path)
        back = load_frf(path)
        assert back.n_channels == 3
        assert back.n_bins == 10

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_frf(tmp_path / "nope.csv")

    def test_decreasing_grid_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        grid = linear_grid(1.0, 10.0, 4)
        data = FrfDataset(grid, np.ones((1, 4), complex))
        store_frf(data, path)
        lines = path.read_text().splitlines()
        lines[1:] = lines[1:][::-1]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="non-monotonic grid"):
            load_frf(path)


def block_for_pole(pole: complex) -> np.ndarray:
    return np.array([[pole.real, pole.imag], [-pole.imag, pole.real]])


class TestRealizationToModal:
    def test_diagonal_case(self):
        A = block_for_pole(-1.0 + 10.0j)
        real = StateSpaceRealization(np.eye(2), A, np.ones((2, 1)),
                                     np.ones((1, 2)))
        modal, discards = realization_to_modal(real, (0.1, 10.0))
        assert len(modal.modes) == 1
        f, zeta = pole_to_modal(-1.0 + 10.0j)
        assert modal.modes[0].frequency_hz == pytest.approx(f)
        assert modal.modes[0].damping_ratio == pytest.approx(zeta)

    def test_filters_and_reports_discards(self):
        blocks = [block_for_pole(-1.0 + 10.0j),      # in band
                  block_for_pole(-1.0 + 500.0j),     # above band
                  np.array([[0.0]])]                 # rigid body at s = 0
        n = 5
        A = np.zeros((n, n))
        A[0:2, 0:2] = blocks[0]
        A[2:4, 2:4] = blocks[1]
        A[4, 4] = 0.0
        real = StateSpaceRealization(np.eye(n), A, np.ones((n, 1)),
                                     np.ones((1, n)))
        modal, discards = realization_to_modal(real, (0.5, 20.0))
        assert len(modal.modes) == 1
        assert len(discards) >= 2
        discarded_poles = [d.pole for d in discards]
        assert any(abs(p) < 1e-12 for p in discarded_poles)
        assert all(d.reason for d in discards)

    def test_modes_sorted_ascending(self):
        n = 4
        A = np.zeros((n, n))
        A[0:2, 0:2] = block_for_pole(-1.0 + 60.0j)
        A[2:4, 2:4] = block_for_pole(-1.0 + 20.0j)
        real = StateSpaceRealization(np.eye(n), A, np.ones((n, 1)),
                                     np.ones((1, n)))
        modal, _ = realization_to_modal(real, (0.5, 20.0))
        assert np.all(np.diff(modal.frequencies_hz()) > 0)

    def test_singular_pencil_raises(self):
        real = StateSpaceRealization(np.zeros((2, 2)), np.eye(2),
                                     np.ones((2, 1)), np.ones((1, 2)))
        with pytest.raises(ValueError, match="singular pencil"):
            realization_to_modal(real, (0.1, 10.0))

    def test_empty_band_raises(self):
        real = StateSpaceRealization(np.eye(2), block_for_pole(-1 + 10j),
                                     np.ones((2, 1)), np.ones((1, 2)))
        with pytest.raises(ValueError):
            realization_to_modal(real, (10.0, 1.0))
