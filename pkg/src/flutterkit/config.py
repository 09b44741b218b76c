"""Run configuration: defaults, config-file parsing, CLI merging.

Config files are flat `key = value` text with optional `[geometry]`,
`[identify]`, and `[flutter]` sections; `#` starts a comment. Command-line
flags override file values, which override defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .fixtures import DEFAULT_BAND_HZ, fixture_geometry, parse_fixture_key
from .wingmodel import WingGeometry

__all__ = ["PipelineConfig", "parse_config_file", "config_from_sources"]

VALID_METHODS = ("frvf", "lf", "none")

_GEOMETRY_KEYS = (
    "chord_m",
    "span_m",
    "flexural_axis_fraction",
    "lift_curve_slope",
    "eccentricity",
    "total_mass_kg",
    "air_density",
)
_IDENTIFY_KEYS = ("method", "orders", "band")
_FLUTTER_KEYS = ("speeds",)
_TOP_KEYS = ("input", "fixture", "out", "seed", "noise")


@dataclass(frozen=True)
class PipelineConfig:
    source_path: str | None = None
    fixture: tuple[int, str] | None = None
    method: str = "frvf"
    orders: tuple[int, int, int] = (6, 24, 2)
    band_hz: tuple[float, float] = DEFAULT_BAND_HZ
    geometry: WingGeometry = field(default_factory=fixture_geometry)
    speeds: tuple[float, float, float] = (0.0, 28.0, 0.25)
    noise: float = 0.0
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.method not in VALID_METHODS:
            raise ValueError(f"method must be one of {VALID_METHODS}")
        lo, hi, step = self.orders
        if lo < 2 or hi < lo or step < 1:
            raise ValueError("orders must satisfy 2 <= lo <= hi with step >= 1")
        if not (0.0 < self.band_hz[0] < self.band_hz[1]):
            raise ValueError("band must satisfy 0 < lo < hi")
        s_lo, s_hi, s_step = self.speeds
        if s_lo < 0.0 or s_hi <= s_lo or s_step <= 0.0:
            raise ValueError("speeds must satisfy 0 <= lo < hi with step > 0")
        if self.noise < 0.0:
            raise ValueError("noise fraction must be non-negative")

    def order_list(self) -> list[int]:
        lo, hi, step = self.orders
        return list(range(lo, hi + 1, step))


def _parse_triple(text: str, caster, what: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"{what} must look like lo:hi:step")
    try:
        return tuple(caster(p) for p in parts)
    except ValueError:
        raise ValueError(f"{what} has non-numeric parts: {text!r}") from None


def _parse_pair(text: str, what: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{what} must look like lo:hi")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ValueError(f"{what} has non-numeric parts: {text!r}") from None


def parse_config_file(path: str) -> dict:
    """Read the key=value file into {section: {key: raw string}}."""
    sections: dict[str, dict[str, str]] = {"": {}, "geometry": {}, "identify": {}, "flutter": {}}
    current = ""
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip().lower()
                if name not in ("geometry", "identify", "flutter"):
                    raise ValueError(f"line {ln}: unknown section [{name}]")
                current = name
                continue
            if "=" not in line:
                raise ValueError(f"line {ln}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            allowed = {
                "": _TOP_KEYS,
                "geometry": _GEOMETRY_KEYS,
                "identify": _IDENTIFY_KEYS,
                "flutter": _FLUTTER_KEYS,
            }[current]
            if key not in allowed:
                where = f"[{current}]" if current else "top level"
                raise ValueError(f"line {ln}: unknown key '{key}' at {where}")
            sections[current][key] = value
    return sections


def config_from_sources(file_path: str | None = None, args=None) -> PipelineConfig:
    """Merge defaults, an optional config file, and parsed CLI args."""
    cfg = PipelineConfig()
    if file_path is not None:
        raw = parse_config_file(file_path)
        top, geo, ident, flut = raw[""], raw["geometry"], raw["identify"], raw["flutter"]
        updates: dict = {}
        if "input" in top:
            updates["source_path"] = top["input"]
        if "fixture" in top:
            updates["fixture"] = parse_fixture_key(top["fixture"])
        if "out" in top:
            updates["out_dir"] = top["out"]
        if "seed" in top:
            updates["seed"] = int(top["seed"])
        if "noise" in top:
            updates["noise"] = float(top["noise"])
        if "method" in ident:
            updates["method"] = ident["method"].lower()
        if "orders" in ident:
            updates["orders"] = _parse_triple(ident["orders"], int, "orders")
        if "band" in ident:
            updates["band_hz"] = _parse_pair(ident["band"], "band")
        if "speeds" in flut:
            updates["speeds"] = _parse_triple(flut["speeds"], float, "speeds")
        if geo:
            geo_kwargs = {k: float(v) for k, v in geo.items()}
            base = updates.get("geometry", cfg.geometry)
            updates["geometry"] = replace(base, **geo_kwargs)
        cfg = replace(cfg, **updates)

    if args is not None:
        updates = {}
        if getattr(args, "input", None):
            updates["source_path"] = args.input
        if getattr(args, "fixture", None):
            updates["fixture"] = parse_fixture_key(args.fixture)
        if getattr(args, "method", None):
            updates["method"] = args.method.lower()
        if getattr(args, "orders", None):
            updates["orders"] = _parse_triple(args.orders, int, "orders")
        if getattr(args, "band", None):
            updates["band_hz"] = _parse_pair(args.band, "band")
        if getattr(args, "speeds", None):
            updates["speeds"] = _parse_triple(args.speeds, float, "speeds")
        if getattr(args, "noise", None) is not None:
            updates["noise"] = float(args.noise)
        if getattr(args, "seed", None) is not None:
            updates["seed"] = int(args.seed)
        if getattr(args, "out", None):
            updates["out_dir"] = args.out
        cfg = replace(cfg, **updates)
    return cfg
