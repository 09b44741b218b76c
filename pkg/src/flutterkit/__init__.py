"""Modal identification from frequency-response data and flutter estimation.

Two identification routes (fast relaxed vector fitting and the Loewner
framework) feed a two-degree-of-freedom aeroelastic reduced-order model whose
p-k solution locates the flutter onset speed.
"""

from .frf import (
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
from .loewner import LfConfig, lf_identify
from .pkflutter import OnsetReport, PkSolution, SpeedGrid, detect_onset, refine_onset, sweep
from .tracking import build_diagram, compare_methods, consolidate_modes
from .vectorfit import VfConfig, frvf_identify
from .wingmodel import (
    ModalTargets,
    StiffnessPair,
    WingGeometry,
    calibrate_stiffness,
    theodorsen,
)

__version__ = "0.1.0"

__all__ = [
    "FrequencyGrid",
    "FrfDataset",
    "Mode",
    "ModalParameterSet",
    "StateSpaceRealization",
    "load_frf",
    "store_frf",
    "synthesize_frf",
    "pole_to_modal",
    "modal_to_pole",
    "realization_to_modal",
    "VfConfig",
    "frvf_identify",
    "LfConfig",
    "lf_identify",
    "build_diagram",
    "consolidate_modes",
    "compare_methods",
    "WingGeometry",
    "StiffnessPair",
    "ModalTargets",
    "calibrate_stiffness",
    "theodorsen",
    "SpeedGrid",
    "PkSolution",
    "OnsetReport",
    "sweep",
    "detect_onset",
    "refine_onset",
    "__version__",
]
