"""Frequency-response data model, modal conversions, and synthetic FRF generation.

Angular frequencies are rad/s internally; every file and report boundary is Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FrequencyGrid",
    "FrfDataset",
    "Mode",
    "ModalParameterSet",
    "StateSpaceRealization",
    "DiscardedPole",
    "synthesize_frf",
    "pole_to_modal",
    "modal_to_pole",
    "realization_to_modal",
    "load_frf",
    "store_frf",
]

FRF_KINDS = ("receptance", "mobility", "accelerance")


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive frequency grid, stored in Hz."""

    values_hz: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values_hz, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("frequency grid needs at least 2 points")
        if not np.all(np.isfinite(vals)):
            raise ValueError("frequency grid has non-finite values")
        if vals[0] <= 0.0 or np.any(np.diff(vals) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing and positive")
        object.__setattr__(self, "values_hz", vals)

    def __len__(self):
        return self.values_hz.size

    @property
    def values_rad(self) -> np.ndarray:
        return 2.0 * np.pi * self.values_hz

    @property
    def band_hz(self) -> tuple[float, float]:
        return float(self.values_hz[0]), float(self.values_hz[-1])


@dataclass(frozen=True)
class FrfDataset:
    """SIMO frequency-response samples: one row per output channel."""

    grid: FrequencyGrid
    responses: np.ndarray
    kind: str = "receptance"
    channel_labels: tuple[str, ...] = ()

    def __post_init__(self):
        resp = np.asarray(self.responses, dtype=complex)
        if resp.ndim == 1:
            resp = resp[np.newaxis, :]
        if resp.shape[1] != len(self.grid):
            raise ValueError(
                f"responses have {resp.shape[1]} columns, grid has {len(self.grid)} bins"
            )
        if not np.all(np.isfinite(resp)):
            raise ValueError("responses contain non-finite entries")
        if self.kind not in FRF_KINDS:
            raise ValueError(f"kind must be one of {FRF_KINDS}")
        labels = tuple(self.channel_labels) or tuple(
            f"ch{i + 1}" for i in range(resp.shape[0])
        )
        if len(labels) != resp.shape[0]:
            raise ValueError("channel label count does not match response rows")
        object.__setattr__(self, "responses", resp)
        object.__setattr__(self, "channel_labels", labels)

    @property
    def n_channels(self) -> int:
        return self.responses.shape[0]

    @property
    def n_bins(self) -> int:
        return self.responses.shape[1]


def pole_to_modal(pole: complex) -> tuple[float, float]:
    """Natural frequency (Hz) and damping ratio of a complex pole (rad/s)."""
    mag = abs(pole)
    if mag == 0.0:
        raise ValueError("zero-magnitude pole has no modal parameters")
    return mag / (2.0 * np.pi), -pole.real / mag


def modal_to_pole(frequency_hz: float, damping_ratio: float) -> complex:
    """Upper-half-plane pole for (f, zeta): s = -zeta*wn + i*wn*sqrt(1-zeta^2)."""
    wn = 2.0 * np.pi * frequency_hz
    return complex(-damping_ratio * wn, wn * np.sqrt(1.0 - damping_ratio**2))


@dataclass(frozen=True)
class Mode:
    """Single vibrational mode with its upper-half-plane pole and shape vector."""

    frequency_hz: float
    damping_ratio: float
    pole: complex
    shape: np.ndarray

    def __post_init__(self):
        shape = np.asarray(self.shape, dtype=complex)
        if shape.ndim != 1 or shape.size == 0:
            raise ValueError("mode shape must be a non-empty vector")
        if not (0.0 < self.damping_ratio < 1.0):
            raise ValueError("retained modes need 0 < zeta < 1")
        wn = 2.0 * np.pi * self.frequency_hz
        if abs(abs(self.pole) - wn) > 1e-9 * wn:
            raise ValueError("pole magnitude inconsistent with frequency_hz")
        if abs(self.pole.real + self.damping_ratio * wn) > 1e-9 * wn:
            raise ValueError("pole real part inconsistent with damping_ratio")
        object.__setattr__(self, "shape", shape)

    @classmethod
    def from_modal(cls, frequency_hz, damping_ratio, shape) -> "Mode":
        return cls(
            frequency_hz=float(frequency_hz),
            damping_ratio=float(damping_ratio),
            pole=modal_to_pole(frequency_hz, damping_ratio),
            shape=shape,
        )

    @property
    def omega_d(self) -> float:
        """Damped natural frequency, rad/s (imaginary part of the pole)."""
        return abs(self.pole.imag)


@dataclass(frozen=True)
class ModalParameterSet:
    """Modes sorted ascending by frequency plus the method that produced them."""

    modes: tuple[Mode, ...]
    source_method: str = "external"

    def __post_init__(self):
        modes = tuple(self.modes)
        freqs = [m.frequency_hz for m in modes]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("modes must be strictly ascending in frequency")
        object.__setattr__(self, "modes", modes)

    def __len__(self):
        return len(self.modes)

    def frequencies_hz(self) -> np.ndarray:
        return np.array([m.frequency_hz for m in self.modes])

    def damping_ratios(self) -> np.ndarray:
        return np.array([m.damping_ratio for m in self.modes])


@dataclass(frozen=True)
class DiscardedPole:
    """Pole excluded from a modal set, with the reason it was dropped."""

    pole: complex
    reason: str


@dataclass(frozen=True)
class StateSpaceRealization:
    """Descriptor realization H(s) = C (sE - A)^-1 B + D."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray | None = None

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E))
        A = np.atleast_2d(np.asarray(self.A))
        B = np.atleast_2d(np.asarray(self.B))
        C = np.atleast_2d(np.asarray(self.C))
        k = E.shape[0]
        if E.shape != (k, k) or A.shape != (k, k):
            raise ValueError("E and A must be square and same size")
        if B.shape[0] != k:
            raise ValueError("B row count must match state dimension")
        if C.shape[1] != k:
            raise ValueError("C column count must match state dimension")
        D = self.D
        if D is None:
            D = np.zeros((C.shape[0], B.shape[1]))
        D = np.atleast_2d(np.asarray(D))
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError("D shape must be outputs x inputs")
        for name, m in (("E", E), ("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, m)

    @property
    def order(self) -> int:
        return self.E.shape[0]

    def transfer(self, s: complex) -> np.ndarray:
        """Evaluate H(s) = C (sE - A)^-1 B + D."""
        return self.C @ np.linalg.solve(s * self.E - self.A, self.B) + self.D


def _residue_matrix(modes: ModalParameterSet) -> np.ndarray:
    """Receptance residues, one column per mode: shape / (2i * omega_d)."""
    p = modes.modes[0].shape.size
    out = np.empty((p, len(modes)), dtype=complex)
    for j, mode in enumerate(modes.modes):
        if mode.shape.size != p:
            raise ValueError("inconsistent shape vector lengths across modes")
        out[:, j] = mode.shape / (2.0j * mode.omega_d)
    return out


def synthesize_frf(
    modes: ModalParameterSet,
    grid: FrequencyGrid,
    noise_rms_fraction: float = 0.0,
    seed: int = 0,
    kind: str = "receptance",
) -> FrfDataset:
    """Receptance FRF of a modal model on a grid, with optional Gaussian noise.

    H(iw) = sum_n [ A_n/(iw - s_n) + conj(A_n)/(iw - conj(s_n)) ] per channel,
    residues A_n = shape_n / (2i * omega_d_n). Noise is complex circular
    Gaussian with RMS = noise_rms_fraction times the clean per-channel RMS,
    deterministic for a fixed seed.
    """
    if len(modes) == 0:
        raise ValueError("mode set is empty")
    if noise_rms_fraction < 0.0:
        raise ValueError("noise_rms_fraction must be non-negative")
    residues = _residue_matrix(modes)
    s = 1j * grid.values_rad
    poles = np.array([m.pole for m in modes.modes])
    # (p, n_modes) residues against (n_modes, N) pole kernels
    kernel = 1.0 / (s[np.newaxis, :] - poles[:, np.newaxis])
    kernel_c = 1.0 / (s[np.newaxis, :] - np.conj(poles)[:, np.newaxis])
    clean = residues @ kernel + np.conj(residues) @ kernel_c
    if kind == "mobility":
        clean = clean * s[np.newaxis, :]
    elif kind == "accelerance":
        clean = clean * s[np.newaxis, :] ** 2
    elif kind != "receptance":
        raise ValueError(f"kind must be one of {FRF_KINDS}")
    if noise_rms_fraction > 0.0:
        rng = np.random.default_rng(seed)
        rms = np.sqrt(np.mean(np.abs(clean) ** 2, axis=1, keepdims=True))
        scale = noise_rms_fraction * rms / np.sqrt(2.0)
        noise = scale * (
            rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
        )
        clean = clean + noise
    return FrfDataset(grid=grid, responses=clean, kind=kind)


def realization_to_modal(
    realization: StateSpaceRealization,
    grid_band: tuple[float, float],
    source_method: str = "external",
    cluster_tol: float = 1e-6,
) -> tuple[ModalParameterSet, list[DiscardedPole]]:
    """Modal parameters from the generalized eigenproblem A v = lambda E v.

    Keeps stable upper-half-plane eigenvalues whose |lambda|/2pi lies inside
    grid_band; shapes come from C times the eigenvector. Real-valued, unstable
    and out-of-band poles land in the discard report instead of disappearing.
    """
    import scipy.linalg

    f_lo, f_hi = grid_band
    try:
        eigvals, eigvecs = scipy.linalg.eig(realization.A, realization.E)
    except Exception as exc:  # pragma: no cover
        raise ValueError(f"pencil eigenvalue solve failed: {exc}") from exc
    if not np.all(np.isfinite(eigvals)):
        raise ValueError("singular pencil: non-finite generalized eigenvalues")

    kept: list[tuple[float, float, complex, np.ndarray]] = []
    discarded: list[DiscardedPole] = []
    for lam, vec in zip(eigvals, eigvecs.T):
        if abs(lam.imag) <= 1e-9 * max(abs(lam), 1.0):
            discarded.append(DiscardedPole(complex(lam), "real-valued (rigid body or artifact)"))
            continue
        if lam.imag < 0:
            continue  # conjugate partner carries the same mode
        if lam.real >= 0:
            discarded.append(DiscardedPole(complex(lam), "unstable"))
            continue
        f, zeta = pole_to_modal(complex(lam))
        if not (f_lo <= f <= f_hi):
            discarded.append(DiscardedPole(complex(lam), "outside band"))
            continue
        if not (0.0 < zeta < 1.0):
            discarded.append(DiscardedPole(complex(lam), "non-oscillatory damping"))
            continue
        # shape up to the usual eigenvector scale ambiguity
        shape = realization.C @ vec
        kept.append((f, zeta, complex(lam), shape))

    kept.sort(key=lambda item: item[0])
    merged: list[tuple[float, float, complex, np.ndarray]] = []
    for item in kept:
        if merged and abs(item[0] - merged[-1][0]) <= cluster_tol * merged[-1][0]:
            continue  # duplicate within clustering tolerance
        merged.append(item)
    if not merged:
        raise ValueError("no eigenvalue inside the requested band")
    modes = tuple(
        Mode(frequency_hz=f, damping_ratio=z, pole=lam, shape=shape)
        for f, z, lam, shape in merged
    )
    return ModalParameterSet(modes=modes, source_method=source_method), discarded


# FRF file format: '# frf kind=<kind> channels=<p>' header, then CSV rows
# 'f_hz, re_ch1, im_ch1, ..., re_chp, im_chp'.


def store_frf(dataset: FrfDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# frf kind={dataset.kind} channels={dataset.n_channels}\n")
        for i, f in enumerate(dataset.grid.values_hz):
            row = [repr(float(f))]
            for c in range(dataset.n_channels):
                val = dataset.responses[c, i]
                row.append(repr(float(val.real)))
                row.append(repr(float(val.imag)))
            fh.write(",".join(row) + "\n")


def load_frf(path) -> FrfDataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# frf"):
            raise ValueError("malformed header: expected '# frf kind=... channels=...'")
        fields = dict(
            part.split("=", 1) for part in header[5:].split() if "=" in part
        )
        try:
            kind = fields["kind"]
            channels = int(fields["channels"])
        except (KeyError, ValueError) as exc:
            raise ValueError("malformed header fields") from exc
        freqs: list[float] = []
        rows: list[list[complex]] = []
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 1 + 2 * channels:
                raise ValueError(f"line {ln}: expected {1 + 2 * channels} fields")
            vals = [float(p) for p in parts]
            freqs.append(vals[0])
            rows.append(
                [complex(vals[1 + 2 * c], vals[2 + 2 * c]) for c in range(channels)]
            )
    grid_vals = np.array(freqs)
    if np.any(np.diff(grid_vals) <= 0):
        raise ValueError("non-monotonic grid")
    grid = FrequencyGrid(grid_vals)
    responses = np.array(rows, dtype=complex).T
    return FrfDataset(grid=grid, responses=responses, kind=kind)
