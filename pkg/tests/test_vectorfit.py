import numpy as np
import pytest

from flutterkit import FrequencyGrid, synthesize_frf
from flutterkit.fixtures import fixture_grid
from flutterkit.vectorfit import (
    VfConfig,
    frvf_identify,
    init_poles,
    pole_relocation_step,
    residue_identification,
)

from conftest import sdof_mode


def true_pole_pairs(modal_set):
    poles = np.array([m.pole for m in modal_set.modes])
    out = np.empty(2 * len(poles), complex)
    out[0::2] = poles
    out[1::2] = poles.conj()
    return out


class TestInitPoles:
    def test_spacing_convention(self):
        poles = init_poles(6, (2.0, 25.0))
        beta = 2 * np.pi * np.array([2.0, 13.5, 25.0])
        assert np.allclose(poles[0::2], -beta / 100 + 1j * beta, rtol=1e-12)
        assert np.allclose(poles[1::2], poles[0::2].conj())

    def test_single_pair_uses_midpoint(self):
        poles = init_poles(2, (2.0, 25.0))
        beta = 2 * np.pi * 13.5
        assert len(poles) == 2
        assert poles[0] == pytest.approx(-beta / 100 + 1j * beta)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            init_poles(5, (2.0, 25.0))
        with pytest.raises(ValueError):
            init_poles(0, (2.0, 25.0))

    def test_rejects_degenerate_band(self):
        with pytest.raises(ValueError):
            init_poles(6, (1.0, 1.0))


class TestPoleRelocation:
    def test_fixed_point(self, small_frf, planted_set):
        start = true_pole_pairs(planted_set)
        new = pole_relocation_step(small_frf, start)
        dist = np.min(np.abs(new[:, None] - start[None, :]), axis=1)
        assert np.max(dist / np.abs(start)) < 1e-8

    def test_converges_from_default_guess(self, small_frf, planted_set):
        poles = init_poles(6, small_frf.grid.band_hz)
        for _ in range(30):
            new = pole_relocation_step(small_frf, poles)
            shift = np.max(np.abs(np.sort_complex(new) - np.sort_complex(poles)))
            poles = new
            if shift < 1e-9:
                break
        truth = true_pole_pairs(planted_set)
        dist = np.min(np.abs(poles[:, None] - truth[None, :]), axis=1)
        assert np.max(dist / np.abs(truth)) < 1e-8

    def test_unstable_poles_reflected(self, small_frf):
        start = init_poles(4, small_frf.grid.band_hz)
        start = -start.real + 1j * start.imag   # push into right half plane
        new = pole_relocation_step(small_frf, start)
        assert np.all(new.real < 0)

    def test_conjugate_closure_required(self, small_frf):
        bad = np.array([-1 + 10j, -1 + 12j])
        with pytest.raises(ValueError, match="conjugation"):
            pole_relocation_step(small_frf, bad)

    def test_zero_frf_rejected(self):
        grid = fixture_grid(64)
        from flutterkit import FrfDataset
        zero = FrfDataset(grid, np.zeros((2, 64), complex))
        with pytest.raises(ValueError):
            pole_relocation_step(zero, init_poles(4, grid.band_hz))

    def test_overparameterized_order_warns(self, planted_set):
        grid = fixture_grid(3)
        frf = synthesize_frf(planted_set, grid)
        with pytest.warns(RuntimeWarning, match="over-parameterized"):
            pole_relocation_step(frf, init_poles(6, grid.band_hz))


class TestResidueIdentification:
    def test_exact_residues_for_sdof(self):
        modal = sdof_mode(5.0, 0.05)
        grid = FrequencyGrid(np.linspace(1.0, 20.0, 256))
        frf = synthesize_frf(modal, grid)
        result = residue_identification(frf, true_pole_pairs(modal),
                                        VfConfig(order=2))
        planted = 1.0 / (2j * modal.modes[0].omega_d)
        idx = int(np.argmax(result.poles.imag))
        assert result.poles[idx] == pytest.approx(modal.modes[0].pole,
                                                  rel=1e-10)
        assert result.residues[0, idx] == pytest.approx(planted, rel=1e-10)
        assert result.rms_fit_error < 1e-10

    def test_exact_fit_on_multimode(self, small_frf, planted_set):
        result = residue_identification(small_frf,
                                        true_pole_pairs(planted_set),
                                        VfConfig(order=6))
        assert result.rms_fit_error < 1e-10
        assert abs(result.d_term).max() < 1e-10
        assert abs(result.e_term).max() < 1e-10

    def test_d_e_terms_reduce_error(self):
        # out-of-band mode leaves a floor that the d/e terms absorb
        modes = sdof_mode(5.0, 0.05)
        from flutterkit import Mode, ModalParameterSet
        far = Mode.from_modal(120.0, 0.02, np.ones(1))
        both = ModalParameterSet(modes.modes + (far,))
        grid = FrequencyGrid(np.linspace(1.0, 20.0, 256))
        frf = synthesize_frf(both, grid)
        poles = true_pole_pairs(modes)
        bare = residue_identification(frf, poles,
                                      VfConfig(order=2, include_d_term=False,
                                               include_e_term=False))
        rich = residue_identification(frf, poles, VfConfig(order=2))
        assert rich.rms_fit_error < bare.rms_fit_error
        assert bare.rms_fit_error < 0.05


class TestFrvfIdentify:
    def test_recovers_planted_modes(self, clean_frf, planted_set):
        result, modal = frvf_identify(clean_frf)
        assert result.converged
        assert len(modal.modes) == 3
        assert modal.source_method == "FRVF"
        for found, ref in zip(modal.modes, planted_set.modes):
            assert found.frequency_hz == pytest.approx(ref.frequency_hz,
                                                       rel=1e-8)
            assert found.damping_ratio == pytest.approx(ref.damping_ratio,
                                                        rel=1e-6)
            assert np.allclose(found.shape, ref.shape, rtol=1e-6, atol=1e-9)

    def test_round_trip_through_synthesis(self, clean_frf):
        _, modal = frvf_identify(clean_frf)
        rebuilt = synthesize_frf(modal, clean_frf.grid)
        err = (np.linalg.norm(rebuilt.responses - clean_frf.responses)
               / np.linalg.norm(clean_frf.responses))
        assert err < 1e-8

    def test_canonical_pole_ordering(self, clean_frf):
        result, _ = frvf_identify(clean_frf)
        pos = result.poles[0::2]
        assert np.all(pos.imag > 0)
        assert np.all(np.diff(np.abs(pos.imag)) > 0)
        assert np.allclose(result.poles[1::2], pos.conj())

    def test_under_modeling_does_not_crash(self, small_frf):
        result, modal = frvf_identify(small_frf, VfConfig(order=2))
        assert result.rms_fit_error > 0.05
        assert len(modal.modes) <= 1

    def test_unrelaxed_variant(self, small_frf, planted_set):
        result, modal = frvf_identify(small_frf, VfConfig(order=6,
                                                          relaxed=False))
        assert result.converged
        freqs = modal.frequencies_hz()
        ref = planted_set.frequencies_hz()
        assert np.allclose(freqs, ref, rtol=1e-6)

    def test_noise_robustness_single_seed(self, planted_set):
        noisy = synthesize_frf(planted_set, fixture_grid(2048),
                               noise_rms_fraction=0.01, seed=0)
        _, modal = frvf_identify(noisy)
        assert len(modal.modes) == 3
        for found, ref in zip(modal.modes, planted_set.modes):
            assert found.frequency_hz == pytest.approx(ref.frequency_hz,
                                                       rel=5e-3)
            assert found.damping_ratio == pytest.approx(ref.damping_ratio,
                                                        rel=0.10)

    def test_band_restriction(self, planted_set):
        frf = synthesize_frf(planted_set, fixture_grid(1024))
        _, modal = frvf_identify(frf, VfConfig(order=6), band_hz=(2.0, 15.0))
        assert len(modal.modes) == 2
        assert max(modal.frequencies_hz()) < 15.0
