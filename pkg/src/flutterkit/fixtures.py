"""Bundled reference data for the benchmark flexible half-wing campaign.

Four mass-loading scenarios (bare wing plus three added-store patterns) were
identified from ground-vibration data by three methods; the first three modes
(first bending, first torsion, second bending) are compiled in here together
with the wing constants of the two-degree-of-freedom reduced-order model and
the published onset speeds the flutter pipeline is checked against.

The reduced-order model keeps the bare-wing inertia for every scenario: the
added stores are lumped masses whose effect is already present in the
identified frequencies and dampings, so smearing them into the distributed
inertia would count them twice.
"""

from __future__ import annotations

import numpy as np

from .frf import FrequencyGrid, Mode, ModalParameterSet
from .wingmodel import ModalTargets, WingGeometry

__all__ = [
    "SCENARIOS",
    "METHODS",
    "SCENARIO_MASSES_KG",
    "MODAL_REFERENCE",
    "REFERENCE_PERCENT_DIFFERENCES",
    "ONSET_REFERENCE_MS",
    "REFERENCE_SPEED_DELTAS",
    "DEFAULT_BAND_HZ",
    "DEFAULT_BINS",
    "fixture_geometry",
    "fixture_modal_set",
    "fixture_targets",
    "fixture_grid",
    "parse_fixture_key",
]

SCENARIOS = (1, 2, 3, 4)
METHODS = ("n4sid", "lf", "frvf")

# total wing mass per loading scenario, kg
SCENARIO_MASSES_KG = {1: 3.024, 2: 3.172, 3: 3.307, 4: 3.658}

BASELINE_SCENARIO = 1

# (scenario, method) -> ((f1_hz, zeta1), (f2_hz, zeta2), (f3_hz, zeta3))
MODAL_REFERENCE = {
    (1, "n4sid"): ((3.190, 0.032), (11.896, 0.066), (17.763, 0.058)),
    (1, "lf"): ((3.202, 0.040), (11.886, 0.063), (17.703, 0.061)),
    (1, "frvf"): ((3.203, 0.028), (11.858, 0.065), (17.725, 0.062)),
    (2, "n4sid"): ((2.957, 0.021), (12.096, 0.060), (17.350, 0.061)),
    (2, "lf"): ((2.958, 0.024), (12.134, 0.057), (17.302, 0.056)),
    (2, "frvf"): ((2.945, 0.025), (12.083, 0.058), (17.294, 0.060)),
    (3, "n4sid"): ((2.775, 0.019), (12.002, 0.058), (17.079, 0.050)),
    (3, "lf"): ((2.769, 0.022), (12.025, 0.055), (17.101, 0.050)),
    (3, "frvf"): ((2.788, 0.021), (12.014, 0.057), (17.023, 0.057)),
    (4, "n4sid"): ((2.729, 0.019), (11.970, 0.050), (15.067, 0.046)),
    (4, "lf"): ((2.725, 0.021), (11.965, 0.048), (15.052, 0.039)),
    (4, "frvf"): ((2.727, 0.019), (11.938, 0.052), (15.004, 0.038)),
}

# published percent differences of LF/FRVF against the N4SID reference,
# (scenario, method) -> ((f1 %, zeta1 %), (f2 %, zeta2 %), (f3 %, zeta3 %))
REFERENCE_PERCENT_DIFFERENCES = {
    (1, "lf"): ((0.38, 25.00), (-0.08, -4.55), (-0.34, 5.17)),
    (1, "frvf"): ((0.41, -12.50), (-0.32, -1.52), (-0.21, 6.90)),
    (2, "lf"): ((0.03, 14.29), (0.31, -5.00), (-0.28, -8.20)),
    (2, "frvf"): ((-0.41, 19.05), (-0.11, -3.33), (-0.32, -1.64)),
    (3, "lf"): ((-0.22, 15.79), (0.19, -5.17), (0.13, 0.00)),
    (3, "frvf"): ((0.47, 10.53), (0.10, -1.72), (-0.33, 14.00)),
    (4, "lf"): ((-0.15, 10.53), (-0.04, -4.00), (-0.10, -15.22)),
    (4, "frvf"): ((-0.07, 0.00), (-0.27, 4.00), (-0.42, -17.39)),
}

# published flutter onset speeds, m/s
ONSET_REFERENCE_MS = {
    (1, "n4sid"): 22.710,
    (1, "lf"): 21.498,
    (1, "frvf"): 22.057,
    (2, "n4sid"): 23.336,
    (2, "lf"): 22.200,
    (2, "frvf"): 22.743,
    (3, "n4sid"): 23.285,
    (3, "lf"): 22.116,
    (3, "frvf"): 22.727,
    (4, "n4sid"): 23.205,
    (4, "lf"): 21.991,
    (4, "frvf"): 22.590,
}

# published percent change of onset speed against the N4SID reference
REFERENCE_SPEED_DELTAS = {
    (1, "lf"): -5.34,
    (1, "frvf"): -2.88,
    (2, "lf"): -4.87,
    (2, "frvf"): -2.54,
    (3, "lf"): -5.02,
    (3, "frvf"): -2.40,
    (4, "lf"): -5.23,
    (4, "frvf"): -2.65,
}

DEFAULT_BAND_HZ = (2.0, 25.0)
DEFAULT_BINS = 2048

# spanwise sensor stations as fractions of the half-span
_STATIONS = (np.arange(8) + 1.0) / 8.0


def _shape_profiles() -> np.ndarray:
    """Real 8-channel shape vectors: first bending, first torsion, second bending."""
    y = _STATIONS
    profiles = np.vstack(
        [
            y**2,              # tip-heavy, no interior node
            y,                 # twist read at offset sensors
            y**2 * (1.0 - 2.0 * y),  # node near mid-span
        ]
    )
    return profiles / np.max(np.abs(profiles), axis=1, keepdims=True)


def fixture_geometry() -> WingGeometry:
    """Wing constants of the reduced-order model (bare-wing inertia)."""
    return WingGeometry(
        chord_m=0.172,
        span_m=1.385,
        flexural_axis_fraction=0.25,
        lift_curve_slope=7.143,
        eccentricity=0.0,
        total_mass_kg=SCENARIO_MASSES_KG[BASELINE_SCENARIO],
        air_density=1.225,
    )


def parse_fixture_key(key: str) -> tuple[int, str]:
    """Validate '<scenario>:<method>' and return (scenario, method)."""
    valid = ", ".join(f"{s}:{m}" for s in SCENARIOS for m in METHODS)
    parts = key.split(":")
    if len(parts) != 2:
        raise ValueError(f"fixture key must look like 'scenario:method'; valid keys: {valid}")
    sc_text, method = parts[0].strip(), parts[1].strip().lower()
    try:
        scenario = int(sc_text)
    except ValueError:
        raise ValueError(f"unknown fixture '{key}'; valid keys: {valid}") from None
    if scenario not in SCENARIOS or method not in METHODS:
        raise ValueError(f"unknown fixture '{key}'; valid keys: {valid}")
    return scenario, method


def fixture_modal_set(scenario: int, method: str) -> ModalParameterSet:
    """Three-mode modal set for one scenario and identification method.

    Shapes are fixed synthetic spanwise profiles shared across methods; the
    published comparison concerns frequency and damping only.
    """
    method = method.lower()
    if (scenario, method) not in MODAL_REFERENCE:
        parse_fixture_key(f"{scenario}:{method}")  # raises with the valid-key list
    profiles = _shape_profiles()
    modes = tuple(
        Mode.from_modal(f, z, shape=profiles[i])
        for i, (f, z) in enumerate(MODAL_REFERENCE[(scenario, method)])
    )
    return ModalParameterSet(modes=modes, source_method=method.upper())


def fixture_targets(scenario: int, method: str) -> ModalTargets:
    """Calibration targets: the first-bending and first-torsion fixture modes."""
    (f1, z1), (f2, z2), _ = MODAL_REFERENCE[(scenario, method.lower())]
    return ModalTargets(bending_hz=f1, torsion_hz=f2, bending_zeta=z1, torsion_zeta=z2)


def fixture_grid(
    n_bins: int = DEFAULT_BINS, band_hz: tuple[float, float] = DEFAULT_BAND_HZ
) -> FrequencyGrid:
    """Linear frequency grid covering the identification band."""
    return FrequencyGrid(np.linspace(band_hz[0], band_hz[1], n_bins))
