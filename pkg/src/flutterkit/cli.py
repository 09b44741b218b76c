"""Command-line front end: synth, identify, flutter, and the full pipeline.

Every command reads its settings from defaults, an optional config file, and
flags (in increasing precedence), then writes its artifacts into the output
directory. Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig, config_from_sources
from .fixtures import (
    DEFAULT_BINS,
    fixture_grid,
    fixture_modal_set,
    fixture_targets,
)
from .frf import FrfDataset, ModalParameterSet, load_frf, store_frf, synthesize_frf
from .loewner import LfConfig, sweep_identify
from .pkflutter import (
    OnsetReport,
    PkSolution,
    SpeedGrid,
    detect_onset,
    export_trajectories,
    refine_onset,
    sweep,
)
from .tracking import build_diagram, consolidate_modes, export_diagram
from .vectorfit import VfConfig, frvf_identify
from .wingmodel import (
    CalibrationError,
    ModalTargets,
    assemble_inertia,
    calibrate_stiffness,
    damping_matrix,
    still_air_modes,
    stiffness_matrix,
)

__all__ = ["RunReport", "cmd_synth", "cmd_identify", "cmd_flutter", "cmd_pipeline", "main"]


@dataclass
class RunReport:
    """Everything one flutter run reports, rendered as text and JSON alike."""

    source: str
    method: str
    modes: list[dict] = field(default_factory=list)
    stiffness_EI: float | None = None
    stiffness_GJ: float | None = None
    flutter_speed_ms: float | None = None
    flutter_bracket: tuple[float, float] | None = None
    divergence_speed_ms: float | None = None
    divergence_bracket: tuple[float, float] | None = None
    critical_mode_index: int | None = None
    speed_range_ms: tuple[float, float] | None = None
    warnings: list[str] = field(default_factory=list)
    timings_s: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "source": self.source,
            "method": self.method,
            "modes": self.modes,
            "stiffness_EI": self.stiffness_EI,
            "stiffness_GJ": self.stiffness_GJ,
            "flutter_speed_ms": self.flutter_speed_ms,
            "flutter_bracket": list(self.flutter_bracket) if self.flutter_bracket else None,
            "divergence_speed_ms": self.divergence_speed_ms,
            "divergence_bracket": list(self.divergence_bracket) if self.divergence_bracket else None,
            "critical_mode_index": self.critical_mode_index,
            "speed_range_ms": list(self.speed_range_ms) if self.speed_range_ms else None,
            "warnings": self.warnings,
            "timings_s": self.timings_s,
        }

    def to_text(self) -> str:
        lines = [
            f"source: {self.source}",
            f"method: {self.method}",
        ]
        for m in self.modes:
            lines.append(
                f"mode {m['mode']}: f = {m['f_hz']:.4f} Hz, zeta = {m['zeta']:.4f}"
            )
        if self.stiffness_EI is not None:
            lines.append(f"calibrated EI = {self.stiffness_EI:.6f} N m^2")
            lines.append(f"calibrated GJ = {self.stiffness_GJ:.6f} N m^2")
        if self.speed_range_ms is not None:
            lines.append(
                f"speed sweep: {self.speed_range_ms[0]:g} to {self.speed_range_ms[1]:g} m/s"
            )
        if self.flutter_speed_ms is not None:
            lines.append(f"flutter onset: {self.flutter_speed_ms:.4f} m/s")
            lines.append(
                f"flutter bracket: [{self.flutter_bracket[0]:g}, {self.flutter_bracket[1]:g}] m/s"
            )
        else:
            lines.append("flutter onset: none inside the swept range")
        if self.divergence_speed_ms is not None:
            lines.append(f"divergence onset: {self.divergence_speed_ms:.4f} m/s")
        else:
            lines.append("divergence onset: none inside the swept range")
        if self.critical_mode_index is not None:
            lines.append(f"critical mode index: {self.critical_mode_index + 1}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for stage, dt in self.timings_s.items():
            lines.append(f"timing {stage}: {dt:.3f} s")
        return "\n".join(lines) + "\n"


# --- input acquisition -----------------------------------------------------


def _describe_source(config: PipelineConfig) -> str:
    if config.source_path:
        return config.source_path
    if config.fixture:
        return f"fixture {config.fixture[0]}:{config.fixture[1]}"
    return "unspecified"


def _acquire_frf(config: PipelineConfig) -> FrfDataset:
    if config.source_path:
        frf = load_frf(config.source_path)
        lo, hi = frf.grid.band_hz
        if config.band_hz[0] < lo or config.band_hz[1] > hi:
            raise ValueError(
                f"band {config.band_hz} lies outside the loaded grid range ({lo:g}, {hi:g}) Hz"
            )
        return frf
    if config.fixture:
        modal = fixture_modal_set(*config.fixture)
        grid = fixture_grid(DEFAULT_BINS, config.band_hz)
        return synthesize_frf(
            modal, grid, noise_rms_fraction=config.noise, seed=config.seed
        )
    raise ValueError("no input: give an FRF file path or --fixture scenario:method")


# --- commands --------------------------------------------------------------


def cmd_synth(config: PipelineConfig) -> dict[str, str]:
    """Write a synthetic FRF file for a bundled fixture."""
    if config.fixture is None:
        raise ValueError("synth requires --fixture scenario:method")
    frf = _acquire_frf(config)
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "synthetic_frf.csv")
    store_frf(frf, path)
    print(f"wrote {path}: {frf.n_channels} channels x {frf.n_bins} bins")
    return {"synthetic_frf.csv": path}


def _identify_modal_set(
    config: PipelineConfig, frf: FrfDataset
) -> tuple[ModalParameterSet, object]:
    """Stabilization-diagram identification with the configured method."""
    band = config.band_hz
    orders = config.order_list()
    if config.method == "frvf":
        def identify(data, order):
            _, modal = frvf_identify(data, VfConfig(order=order), band_hz=band)
            return modal
    elif config.method == "lf":
        identify = sweep_identify(
            frf,
            LfConfig(direction_seed=config.seed),
            band_hz=band,
            max_order=max(orders),
        )
    else:
        raise ValueError("identification requires --method frvf or --method lf")
    diagram = build_diagram(identify, orders, frf, method=config.method.upper())
    modal = consolidate_modes(diagram, source_method=config.method.upper())
    return modal, diagram


def cmd_identify(config: PipelineConfig) -> tuple[ModalParameterSet, dict[str, str]]:
    """Identify modes from the input FRF; write modes.csv and the diagram."""
    frf = _acquire_frf(config)
    modal, diagram = _identify_modal_set(config, frf)
    os.makedirs(config.out_dir, exist_ok=True)
    artifacts: dict[str, str] = {}

    modes_path = os.path.join(config.out_dir, "modes.csv")
    with open(modes_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("mode, f_hz, zeta, method\n")
        for i, m in enumerate(modal.modes, start=1):
            fh.write(
                f"{i}, {m.frequency_hz:.9g}, {m.damping_ratio:.9g}, {modal.source_method}\n"
            )
    artifacts["modes.csv"] = modes_path

    diagram_path = os.path.join(config.out_dir, "stabilization.csv")
    export_diagram(diagram, diagram_path)
    artifacts["stabilization.csv"] = diagram_path

    from .plots import plot_stabilization

    artifacts["stabilization_diagram.png"] = plot_stabilization(diagram, config.out_dir)

    for i, m in enumerate(modal.modes, start=1):
        print(f"mode {i}: f = {m.frequency_hz:.4f} Hz, zeta = {m.damping_ratio:.4f}")
    return modal, artifacts


def _flutter_core(
    config: PipelineConfig, targets: ModalTargets, report: RunReport
) -> tuple[PkSolution, OnsetReport]:
    """calibrate -> assemble -> sweep -> detect -> refine, filling the report."""
    geom = config.geometry
    t0 = time.perf_counter()
    stiffness = calibrate_stiffness(targets, geom)
    report.stiffness_EI = stiffness.EI
    report.stiffness_GJ = stiffness.GJ
    report.timings_s["calibrate"] = time.perf_counter() - t0

    a_m = assemble_inertia(geom)
    e_stiff = stiffness_matrix(geom, stiffness)
    _, Phi = still_air_modes(a_m, e_stiff)
    d = damping_matrix(Phi, targets)

    lo, hi, step = config.speeds
    grid = SpeedGrid(np.arange(lo, hi + 1e-9, step))
    t0 = time.perf_counter()
    solution = sweep(geom, stiffness, d, grid)
    report.timings_s["sweep"] = time.perf_counter() - t0
    report.speed_range_ms = (float(grid.speeds[0]), float(grid.speeds[-1]))

    n_bad = int(np.sum(~solution.converged))
    if n_bad:
        report.warnings.append(f"{n_bad} p-k points did not converge in k")

    onset = detect_onset(solution)
    report.warnings.extend(onset.notes)

    t0 = time.perf_counter()
    flutter = onset.flutter_speed_ms
    if onset.flutter_bracket and onset.flutter_bracket[0] != onset.flutter_bracket[1]:
        idx = int(np.searchsorted(solution.speeds, onset.flutter_bracket[0]))
        flutter = refine_onset(
            geom, stiffness, d, onset.flutter_bracket, lam_lo=solution.lam[idx]
        )
    divergence = onset.divergence_speed_ms
    if onset.divergence_bracket and onset.divergence_bracket[0] != onset.divergence_bracket[1]:
        idx = int(np.searchsorted(solution.speeds, onset.divergence_bracket[0]))
        divergence = refine_onset(
            geom, stiffness, d, onset.divergence_bracket, lam_lo=solution.lam[idx]
        )
    report.timings_s["refine"] = time.perf_counter() - t0

    report.flutter_speed_ms = flutter
    report.flutter_bracket = onset.flutter_bracket
    report.divergence_speed_ms = divergence
    report.divergence_bracket = onset.divergence_bracket
    report.critical_mode_index = onset.critical_mode_index
    return solution, onset


def _write_flutter_artifacts(
    config: PipelineConfig, solution: PkSolution, onset: OnsetReport, report: RunReport
) -> dict[str, str]:
    os.makedirs(config.out_dir, exist_ok=True)
    artifacts: dict[str, str] = {}
    traj_path = os.path.join(config.out_dir, "trajectories.csv")
    export_trajectories(solution, traj_path)
    artifacts["trajectories.csv"] = traj_path

    refined = OnsetReport(
        flutter_speed_ms=report.flutter_speed_ms,
        divergence_speed_ms=report.divergence_speed_ms,
        critical_mode_index=report.critical_mode_index,
        flutter_bracket=report.flutter_bracket,
        divergence_bracket=report.divergence_bracket,
        notes=onset.notes,
    )
    from .plots import plot_trajectories

    for path in plot_trajectories(solution, config.out_dir, refined):
        artifacts[os.path.basename(path)] = path

    text_path = os.path.join(config.out_dir, "report.txt")
    with open(text_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_text())
    artifacts["report.txt"] = text_path

    json_path = os.path.join(config.out_dir, "report.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts["report.json"] = json_path
    return artifacts


def _targets_from_modes(modal: ModalParameterSet) -> ModalTargets:
    if len(modal) < 2:
        raise RuntimeError(
            f"flutter model needs the first two modes; identification returned {len(modal)}"
        )
    m1, m2 = modal.modes[0], modal.modes[1]
    return ModalTargets(
        bending_hz=m1.frequency_hz,
        torsion_hz=m2.frequency_hz,
        bending_zeta=m1.damping_ratio,
        torsion_zeta=m2.damping_ratio,
    )


def cmd_flutter(config: PipelineConfig) -> tuple[RunReport, dict[str, str]]:
    """Flutter estimate for a bundled fixture's modal parameters."""
    if config.fixture is None:
        raise ValueError(
            "flutter works from a fixture (use 'pipeline' to go from an FRF file)"
        )
    scenario, method = config.fixture
    targets = fixture_targets(scenario, method)
    modal = fixture_modal_set(scenario, method)
    report = RunReport(source=_describe_source(config), method=method.upper())
    report.modes = [
        {"mode": i, "f_hz": m.frequency_hz, "zeta": m.damping_ratio}
        for i, m in enumerate(modal.modes, start=1)
    ]
    solution, onset = _flutter_core(config, targets, report)
    artifacts = _write_flutter_artifacts(config, solution, onset, report)
    print(report.to_text(), end="")
    return report, artifacts


def _hash_artifact(name: str, path: str) -> str:
    """sha256 of the artifact with volatile timing content stripped."""
    with open(path, "rb") as fh:
        payload = fh.read()
    if name == "report.json":
        doc = json.loads(payload)
        doc.pop("timings_s", None)
        payload = json.dumps(doc, indent=2, sort_keys=True).encode()
    elif name == "report.txt":
        lines = payload.decode("utf-8").splitlines()
        payload = "\n".join(ln for ln in lines if not ln.startswith("timing ")).encode()
    return hashlib.sha256(payload).hexdigest()


def cmd_pipeline(config: PipelineConfig) -> tuple[RunReport, dict[str, str]]:
    """FRF -> identification -> calibration -> p-k flutter, with a manifest."""
    artifacts: dict[str, str] = {}
    frf = _acquire_frf(config)
    if config.fixture is not None and config.source_path is None:
        os.makedirs(config.out_dir, exist_ok=True)
        frf_path = os.path.join(config.out_dir, "synthetic_frf.csv")
        store_frf(frf, frf_path)
        artifacts["synthetic_frf.csv"] = frf_path

    report = RunReport(source=_describe_source(config), method=config.method.upper())
    t0 = time.perf_counter()
    modal, diagram = _identify_modal_set(config, frf)
    report.timings_s["identify"] = time.perf_counter() - t0
    report.modes = [
        {"mode": i, "f_hz": m.frequency_hz, "zeta": m.damping_ratio}
        for i, m in enumerate(modal.modes, start=1)
    ]

    os.makedirs(config.out_dir, exist_ok=True)
    modes_path = os.path.join(config.out_dir, "modes.csv")
    with open(modes_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("mode, f_hz, zeta, method\n")
        for i, m in enumerate(modal.modes, start=1):
            fh.write(
                f"{i}, {m.frequency_hz:.9g}, {m.damping_ratio:.9g}, {modal.source_method}\n"
            )
    artifacts["modes.csv"] = modes_path
    diagram_path = os.path.join(config.out_dir, "stabilization.csv")
    export_diagram(diagram, diagram_path)
    artifacts["stabilization.csv"] = diagram_path
    from .plots import plot_stabilization

    artifacts["stabilization_diagram.png"] = plot_stabilization(diagram, config.out_dir)

    targets = _targets_from_modes(modal)
    solution, onset = _flutter_core(config, targets, report)
    artifacts.update(_write_flutter_artifacts(config, solution, onset, report))

    manifest = {
        "config": {
            "source": _describe_source(config),
            "method": config.method,
            "orders": list(config.orders),
            "band_hz": list(config.band_hz),
            "speeds": list(config.speeds),
            "noise": config.noise,
            "seed": config.seed,
        },
        "artifacts": {
            name: _hash_artifact(name, path) for name, path in sorted(artifacts.items())
        },
    }
    manifest_path = os.path.join(config.out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts["manifest.json"] = manifest_path

    print(report.to_text(), end="")
    return report, artifacts


# --- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flutterkit",
        description="Modal identification from FRF data and p-k flutter estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synth", "write a synthetic FRF file for a bundled fixture"),
        ("identify", "identify modal parameters from an FRF"),
        ("flutter", "estimate flutter onset for a fixture's modal parameters"),
        ("pipeline", "identification plus flutter estimation end to end"),
    ):
        p = sub.add_parser(name, help=help_text)
        if name in ("identify", "pipeline"):
            p.add_argument("input", nargs="?", default=None, help="FRF file path")
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--fixture", default=None, metavar="SC:METHOD",
                       help="bundled fixture, e.g. 1:n4sid")
        p.add_argument("--method", default=None, choices=("frvf", "lf", "none"))
        p.add_argument("--orders", default=None, metavar="LO:HI:STEP")
        p.add_argument("--band", default=None, metavar="LO:HI", help="band in Hz")
        p.add_argument("--speeds", default=None, metavar="LO:HI:STEP", help="sweep in m/s")
        p.add_argument("--noise", default=None, type=float, help="FRF noise RMS fraction")
        p.add_argument("--seed", default=None, type=int)
        p.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_sources(getattr(args, "config", None), args)
        if args.command == "synth":
            cmd_synth(config)
        elif args.command == "identify":
            cmd_identify(config)
        elif args.command == "flutter":
            cmd_flutter(config)
        else:
            cmd_pipeline(config)
    except (CalibrationError, RuntimeError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
