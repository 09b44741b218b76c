"""Stabilization diagrams, pole consolidation, and cross-method comparison.

An identification routine is swept over model order; poles that reappear at
consecutive orders with consistent frequency and damping are physical, the
rest are fitting artifacts. Consolidated modes take the median frequency and
damping across their chain, which shrugs off single-order outliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frf import FrfDataset, Mode, ModalParameterSet

__all__ = [
    "DiagramEntry",
    "StabilizationDiagram",
    "ComparisonRow",
    "ComparisonResult",
    "build_diagram",
    "consolidate_modes",
    "consolidate_across_sets",
    "compare_methods",
    "export_diagram",
]

FREQ_STABLE_TOL = 0.01
DAMP_STABLE_TOL = 0.05
MATCH_TOL = 0.10


@dataclass(frozen=True)
class DiagramEntry:
    order: int
    mode: Mode
    freq_stable: bool
    damp_stable: bool


@dataclass(frozen=True)
class StabilizationDiagram:
    orders: tuple[int, ...]
    entries: tuple[DiagramEntry, ...]
    failures: tuple[tuple[int, str], ...] = ()
    method: str = ""

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.orders, self.orders[1:])):
            raise ValueError("orders must be strictly increasing")

    def at_order(self, order: int) -> list[DiagramEntry]:
        return [e for e in self.entries if e.order == order]


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    value_a: float
    value_b: float
    relative_difference_percent: float

    def __post_init__(self):
        if self.value_a != 0 and not np.isfinite(self.relative_difference_percent):
            raise ValueError("relative difference must be finite for nonzero reference")


@dataclass(frozen=True)
class ComparisonResult:
    rows: tuple[ComparisonRow, ...]
    unmatched_reference: tuple[Mode, ...] = ()
    unmatched_candidate: tuple[Mode, ...] = ()

    def __iter__(self):
        return iter(self.rows)


def build_diagram(identify, orders, frf: FrfDataset, method: str = "") -> StabilizationDiagram:
    """Run identify(frf, order) over the order sweep and flag repeat poles.

    A pole is freq_stable when a pole at the previous order lies within 1% in
    frequency, damp_stable when that partner is also within 5% in damping.
    An identification failure at one order is recorded and the sweep goes on.
    """
    orders = sorted(set(int(k) for k in orders))
    if not orders:
        raise ValueError("order range is empty")
    entries: list[DiagramEntry] = []
    failures: list[tuple[int, str]] = []
    prev_modes: list[Mode] | None = None
    for k in orders:
        try:
            modal_set = identify(frf, k)
        except Exception as exc:  # identification blowups stay in the record
            failures.append((k, f"{type(exc).__name__}: {exc}"))
            prev_modes = None
            continue
        modes = list(modal_set.modes)
        for m in modes:
            freq_ok = False
            damp_ok = False
            if prev_modes:
                diffs = [abs(m.frequency_hz - q.frequency_hz) / q.frequency_hz for q in prev_modes]
                j = int(np.argmin(diffs))
                if diffs[j] <= FREQ_STABLE_TOL:
                    freq_ok = True
                    q = prev_modes[j]
                    if q.damping_ratio > 0 and (
                        abs(m.damping_ratio - q.damping_ratio) / q.damping_ratio
                        <= DAMP_STABLE_TOL
                    ):
                        damp_ok = True
            entries.append(DiagramEntry(order=k, mode=m, freq_stable=freq_ok, damp_stable=damp_ok))
        prev_modes = modes
    return StabilizationDiagram(
        orders=tuple(orders),
        entries=tuple(entries),
        failures=tuple(failures),
        method=method,
    )


def _chain_clusters(tagged: list[tuple[int, float, float, Mode]], orders: list[int]):
    """Group (order, f, zeta, mode) tuples into consecutive-order chains by frequency."""
    order_pos = {k: i for i, k in enumerate(orders)}
    clusters: list[list[tuple[int, float, float, Mode]]] = []
    for item in sorted(tagged, key=lambda t: (order_pos[t[0]], t[1])):
        k, f, _, _ = item
        best = None
        for cl in clusters:
            k_last, f_last = cl[-1][0], cl[-1][1]
            if order_pos[k] - order_pos[k_last] != 1:
                continue
            rel = abs(f - f_last) / f_last
            if rel <= FREQ_STABLE_TOL and (best is None or rel < best[1]):
                best = (cl, rel)
        if best is not None:
            best[0].append(item)
        else:
            clusters.append([item])
    return clusters


def consolidate_modes(
    diagram: StabilizationDiagram,
    min_consecutive: int = 3,
    source_method: str | None = None,
) -> ModalParameterSet:
    """Collapse chains of damp_stable poles into one mode each.

    Chains shorter than min_consecutive orders are dropped; survivors take
    the median frequency and damping over the chain, with the shape from the
    highest order in it.
    """
    if not diagram.entries:
        raise ValueError("diagram is empty")
    tagged = [
        (e.order, e.mode.frequency_hz, e.mode.damping_ratio, e.mode)
        for e in diagram.entries
        if e.damp_stable
    ]
    clusters = _chain_clusters(tagged, list(diagram.orders))
    modes = []
    for cl in clusters:
        # the chain's first member was stable against the order before the
        # chain started, so the physical pole spans one extra order
        if len(cl) + 1 < min_consecutive:
            continue
        freqs = [t[1] for t in cl]
        zetas = [t[2] for t in cl]
        f_med = float(np.median(freqs))
        z_med = float(np.median(zetas))
        shape = cl[-1][3].shape
        modes.append(Mode.from_modal(f_med, z_med, shape=shape))
    if not modes:
        raise ValueError("no stable clusters found")
    modes.sort(key=lambda m: m.frequency_hz)
    return ModalParameterSet(
        modes=tuple(modes),
        source_method=source_method if source_method is not None else diagram.method,
    )


def consolidate_across_sets(
    sets: list[ModalParameterSet], source_method: str
) -> ModalParameterSet:
    """Merge modal sets from nearby model orders by majority vote.

    Modes within 1% frequency across sets form one cluster; clusters present
    in a majority of the sets survive with median frequency and damping.
    """
    if not sets:
        raise ValueError("no modal sets to consolidate")
    if len(sets) == 1:
        return ModalParameterSet(modes=sets[0].modes, source_method=source_method)
    clusters: list[list[Mode]] = []
    for ms in sets:
        for m in ms.modes:
            for cl in clusters:
                if abs(m.frequency_hz - cl[-1].frequency_hz) / cl[-1].frequency_hz <= FREQ_STABLE_TOL:
                    cl.append(m)
                    break
            else:
                clusters.append([m])
    need = len(sets) // 2 + 1
    modes = []
    for cl in clusters:
        if len(cl) < need:
            continue
        f_med = float(np.median([m.frequency_hz for m in cl]))
        z_med = float(np.median([m.damping_ratio for m in cl]))
        shape = min(cl, key=lambda m: abs(m.frequency_hz - f_med)).shape
        modes.append(Mode.from_modal(f_med, z_med, shape=shape))
    if not modes:
        raise ValueError("no stable clusters found")
    modes.sort(key=lambda m: m.frequency_hz)
    return ModalParameterSet(modes=tuple(modes), source_method=source_method)


def compare_methods(
    reference: ModalParameterSet, candidate: ModalParameterSet
) -> ComparisonResult:
    """Pair modes by nearest frequency and tabulate percent differences.

    Greedy pairing within 10% relative frequency; each matched pair emits a
    frequency row and a damping row with 100*(candidate - reference)/reference.
    Modes without a partner are carried unmatched rather than dropped.
    """
    if not reference.modes or not candidate.modes:
        raise ValueError("both modal sets must be non-empty")
    pairs = []
    for i, r in enumerate(reference.modes):
        for j, c in enumerate(candidate.modes):
            rel = abs(c.frequency_hz - r.frequency_hz) / r.frequency_hz
            if rel <= MATCH_TOL:
                pairs.append((rel, i, j))
    pairs.sort()
    used_r: set[int] = set()
    used_c: set[int] = set()
    matched: list[tuple[int, int]] = []
    for _, i, j in pairs:
        if i in used_r or j in used_c:
            continue
        used_r.add(i)
        used_c.add(j)
        matched.append((i, j))
    matched.sort()
    rows = []
    for n, (i, j) in enumerate(matched, start=1):
        r, c = reference.modes[i], candidate.modes[j]
        rows.append(
            ComparisonRow(
                label=f"mode {n} frequency",
                value_a=r.frequency_hz,
                value_b=c.frequency_hz,
                relative_difference_percent=100.0 * (c.frequency_hz - r.frequency_hz) / r.frequency_hz,
            )
        )
        rows.append(
            ComparisonRow(
                label=f"mode {n} damping",
                value_a=r.damping_ratio,
                value_b=c.damping_ratio,
                relative_difference_percent=100.0 * (c.damping_ratio - r.damping_ratio) / r.damping_ratio,
            )
        )
    return ComparisonResult(
        rows=tuple(rows),
        unmatched_reference=tuple(
            m for i, m in enumerate(reference.modes) if i not in used_r
        ),
        unmatched_candidate=tuple(
            m for j, m in enumerate(candidate.modes) if j not in used_c
        ),
    )


def export_diagram(diagram: StabilizationDiagram, path) -> None:
    """Write the diagram as CSV: order, f_hz, zeta, freq_stable, damp_stable."""
    lines = ["order, f_hz, zeta, freq_stable, damp_stable"]
    for e in diagram.entries:
        lines.append(
            f"{e.order}, {e.mode.frequency_hz!r}, {e.mode.damping_ratio!r}, "
            f"{int(e.freq_stable)}, {int(e.damp_stable)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
