import warnings

import numpy as np
import pytest

from flutterkit import Mode, ModalParameterSet
from flutterkit.tracking import (
    StabilizationDiagram,
    build_diagram,
    compare_methods,
    consolidate_modes,
    export_diagram,
)
from flutterkit.vectorfit import VfConfig, frvf_identify


def make_set(freqs, zetas, method="X"):
    modes = tuple(Mode.from_modal(f, z, np.ones(2))
                  for f, z in zip(freqs, zetas))
    return ModalParameterSet(modes, method)


def drifting_identify(frf, order):
    """Two planted modes whose estimates settle once the order is high."""
    if order < 8:
        return make_set([3.0, 10.0], [0.02, 0.05])
    return make_set([3.001, 10.001], [0.0201, 0.0501])


def flaky_identify(frf, order):
    if order == 8:
        raise ValueError("synthetic failure")
    return make_set([3.0, 10.0], [0.02, 0.05])


class TestBuildDiagram:
    def test_stability_flags(self, small_frf):
        diag = build_diagram(drifting_identify, (6, 8, 10), small_frf, "X")
        by_order = {k: [e for e in diag.entries if e.order == k]
                    for k in (6, 8, 10)}
        assert all(not e.freq_stable and not e.damp_stable
                   for e in by_order[6])
        assert all(e.freq_stable and e.damp_stable for e in by_order[8])
        assert all(e.freq_stable and e.damp_stable for e in by_order[10])

    def test_single_order_has_no_flags(self, small_frf):
        diag = build_diagram(drifting_identify, (6,), small_frf, "X")
        assert all(not e.freq_stable and not e.damp_stable
                   for e in diag.entries)

    def test_failures_recorded_and_chain_broken(self, small_frf):
        diag = build_diagram(flaky_identify, (6, 8, 10, 12), small_frf, "X")
        assert len(diag.failures) == 1
        order, message = diag.failures[0]
        assert order == 8
        assert "synthetic failure" in message
        # order 10 follows a failed order, so it has no reference to compare to
        assert all(not e.freq_stable for e in diag.entries if e.order == 10)
        assert all(e.freq_stable for e in diag.entries if e.order == 12)

    def test_orders_normalized(self, small_frf):
        diag = build_diagram(drifting_identify, (8, 6, 8), small_frf, "X")
        assert diag.orders == (6, 8)


class TestConsolidate:
    def test_median_representative(self, small_frf):
        diag = build_diagram(drifting_identify, (6, 8, 10, 12), small_frf,
                             "X")
        merged = consolidate_modes(diag)
        assert len(merged.modes) == 2
        # stable cluster holds the settled values; median sits on them
        assert merged.modes[0].frequency_hz == pytest.approx(3.001)
        assert merged.modes[1].frequency_hz == pytest.approx(10.001)

    def test_min_consecutive_above_orders_raises(self, small_frf):
        diag = build_diagram(drifting_identify, (6, 8), small_frf, "X")
        with pytest.raises(ValueError, match="no stable clusters"):
            consolidate_modes(diag, min_consecutive=5)

    def test_duplicate_orders_idempotent(self, small_frf):
        ref = consolidate_modes(
            build_diagram(drifting_identify, (6, 8, 10, 12), small_frf, "X"))
        again = consolidate_modes(
            build_diagram(drifting_identify, (6, 6, 8, 8, 10, 12, 12),
                          small_frf, "X"))
        assert len(again.modes) == len(ref.modes)
        for a, b in zip(again.modes, ref.modes):
            assert a.frequency_hz == pytest.approx(b.frequency_hz)
            assert a.damping_ratio == pytest.approx(b.damping_ratio)

    def test_empty_diagram_raises(self):
        diag = StabilizationDiagram((6, 8), (), (), "X")
        with pytest.raises(ValueError):
            consolidate_modes(diag)

    def test_integration_with_vector_fitting(self, small_frf, planted_set):
        def identify(frf, order):
            with warnings.catch_warnings():
                # orders past the true rank are deficient by construction
                warnings.simplefilter("ignore", RuntimeWarning)
                _, modal = frvf_identify(frf, VfConfig(order=order))
            return modal

        diag = build_diagram(identify, (6, 8, 10), small_frf, "FRVF")
        merged = consolidate_modes(diag)
        assert merged.source_method == "FRVF"
        assert len(merged.modes) == 3
        assert np.allclose(merged.frequencies_hz(),
                           planted_set.frequencies_hz(), rtol=1e-6)


class TestCompareMethods:
    def test_hand_arithmetic(self):
        ref = make_set([10.0], [0.05], "A")
        cand = make_set([10.1], [0.045], "B")
        result = compare_methods(ref, cand)
        rows = {r.label: r for r in result.rows}
        assert rows["mode 1 frequency"].relative_difference_percent == \
            pytest.approx(1.0)
        assert rows["mode 1 damping"].relative_difference_percent == \
            pytest.approx(-10.0)
        assert rows["mode 1 frequency"].value_a == 10.0
        assert rows["mode 1 frequency"].value_b == 10.1

    def test_identical_sets_give_zero(self):
        ref = make_set([3.19, 11.896], [0.032, 0.066])
        result = compare_methods(ref, ref)
        for row in result.rows:
            assert row.relative_difference_percent == 0.0
        assert not result.unmatched_reference
        assert not result.unmatched_candidate

    def test_unmatched_modes_reported(self):
        ref = make_set([3.0, 10.0], [0.02, 0.05])
        cand = make_set([3.0, 30.0], [0.02, 0.01])
        result = compare_methods(ref, cand)
        assert len(result.rows) == 2       # one matched mode, two rows
        assert len(result.unmatched_reference) == 1
        assert len(result.unmatched_candidate) == 1

    def test_match_window_is_ten_percent(self):
        ref = make_set([10.0], [0.05])
        near = make_set([10.9], [0.05])
        far = make_set([11.5], [0.05])
        assert len(compare_methods(ref, near).rows) == 2
        assert len(compare_methods(ref, far).rows) == 0


class TestExport:
    def test_csv_layout(self, tmp_path, small_frf):
        diag = build_diagram(drifting_identify, (6, 8), small_frf, "X")
        path = tmp_path / "diag.csv"
        export_diagram(diag, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "order, f_hz, zeta, freq_stable, damp_stable"
        assert len(lines) == 1 + 4
        assert lines[1].startswith("6, 3")
        assert lines[3].endswith("1, 1")   # stable entries at order 8
