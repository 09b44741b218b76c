"""p-k aeroelastic eigenvalue solver, speed sweep, and onset detection.

Each tracked mode iterates between the reduced frequency and the quadratic
eigenvalue it implies until self-consistent, marching over an airspeed grid
with warm starts. Flutter is a real-part zero crossing of an oscillatory
eigenvalue; divergence is the oscillation-free crossing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .wingmodel import (
    StiffnessPair,
    WingGeometry,
    assemble_aero,
    assemble_inertia,
    m_theta_dot,
    pivot_parameter,
    stiffness_matrix,
)

__all__ = [
    "SpeedGrid",
    "PkSolution",
    "OnsetReport",
    "pk_at_speed",
    "sweep",
    "detect_onset",
    "refine_onset",
    "export_trajectories",
]

K_CONV_REL = 1e-6
K_MAX_ITER = 100
DIVERGENCE_IM_THRESHOLD = 1e-3  # rad/s
K_FLOOR = 1e-9


@dataclass(frozen=True)
class SpeedGrid:
    """Increasing non-negative airspeeds, m/s."""

    speeds: np.ndarray

    def __post_init__(self):
        sp = np.asarray(self.speeds, dtype=float)
        if sp.ndim != 1 or sp.size == 0:
            raise ValueError("speed grid must be a non-empty vector")
        if sp[0] < 0 or np.any(np.diff(sp) <= 0):
            raise ValueError("speeds must be non-negative and strictly increasing")
        object.__setattr__(self, "speeds", sp)

    @classmethod
    def default(cls) -> "SpeedGrid":
        return cls(np.arange(0.0, 28.0 + 1e-9, 0.25))

    def __len__(self):
        return self.speeds.size


@dataclass(frozen=True)
class PkSolution:
    """Per-speed, per-mode eigenvalue trajectories of one sweep."""

    speeds: np.ndarray
    lam: np.ndarray          # (n_speeds, n_modes) complex
    k_red: np.ndarray        # converged reduced frequency, NaN at U = 0
    iterations: np.ndarray
    converged: np.ndarray
    chord_m: float

    @property
    def n_modes(self) -> int:
        return self.lam.shape[1]

    def frequencies_hz(self) -> np.ndarray:
        return np.abs(self.lam) / (2.0 * np.pi)

    def damping_ratios(self) -> np.ndarray:
        mag = np.abs(self.lam)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(mag > 0, -self.lam.real / np.where(mag > 0, mag, 1.0), 0.0)


@dataclass(frozen=True)
class OnsetReport:
    """Detected aeroelastic instability onsets within a swept range."""

    flutter_speed_ms: float | None = None
    divergence_speed_ms: float | None = None
    critical_mode_index: int | None = None
    flutter_bracket: tuple[float, float] | None = None
    divergence_bracket: tuple[float, float] | None = None
    notes: tuple[str, ...] = ()


class _PkModel:
    """Frozen structural blocks plus geometry for eigenvalue evaluations."""

    def __init__(self, geom: WingGeometry, stiffness: StiffnessPair, d_matrix: np.ndarray):
        self.geom = geom
        self.a_m = assemble_inertia(geom)
        self.e_stiff = stiffness_matrix(geom, stiffness)
        self.d = np.asarray(d_matrix, dtype=float)
        self.pivot = pivot_parameter(geom)
        self._eye = np.eye(2)

    def companion(self, U: float, k: float) -> np.ndarray:
        if U == 0.0:
            b_tot = self.d
            c_tot = self.e_stiff
        else:
            M = m_theta_dot(max(k, K_FLOOR), self.pivot, self.geom.lift_curve_slope)
            b_aero, c_aero = assemble_aero(self.geom, M)
            rho = self.geom.air_density
            b_tot = rho * U * b_aero + self.d
            c_tot = rho * U * U * c_aero + self.e_stiff
        lower = np.hstack(
            [-np.linalg.solve(self.a_m, c_tot), -np.linalg.solve(self.a_m, b_tot)]
        )
        return np.vstack([np.hstack([np.zeros((2, 2)), self._eye]), lower])

    def still_air_eigen(self) -> np.ndarray:
        """Two upper-half-plane still-air eigenvalues, ascending imaginary part."""
        ev = np.linalg.eigvals(self.companion(0.0, 0.0))
        up = ev[ev.imag > 0]
        if up.size != 2:
            # zero-damping or defective corner cases: fall back to pairing by
            # magnitude of the imaginary part
            up = ev[np.argsort(-ev.imag)][:2]
        return up[np.argsort(up.imag)]


def _select_nearest(candidates: np.ndarray, lam_prev: complex) -> complex:
    """Nearest eigenvalue to the previous one, damping-continuity tie-break."""
    dist = np.abs(candidates - lam_prev)
    order = np.argsort(dist)
    best = candidates[order[0]]
    if dist.size > 1 and dist[order[1]] - dist[order[0]] <= 1e-12 * max(dist[order[0]], 1.0):
        # equidistant pair: prefer the candidate whose damping ratio moves least
        prev_z = -lam_prev.real / max(abs(lam_prev), 1e-300)
        z0 = -candidates[order[0]].real / max(abs(candidates[order[0]]), 1e-300)
        z1 = -candidates[order[1]].real / max(abs(candidates[order[1]]), 1e-300)
        if abs(z1 - prev_z) < abs(z0 - prev_z):
            best = candidates[order[1]]
    return complex(best)


def pk_at_speed(
    geom: WingGeometry,
    stiffness: StiffnessPair,
    d_matrix: np.ndarray,
    U: float,
    k_init: np.ndarray | None = None,
    lam_prev: np.ndarray | None = None,
    model: _PkModel | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One speed point: per-mode (lambda, converged k, iterations, converged).

    At U = 0 the aerodynamic terms are skipped and the still-air quadratic
    problem is solved directly. For U > 0 each mode loops: evaluate the pitch
    damping derivative at the current k, assemble, solve the companion
    eigenproblem, pick the eigenvalue nearest the mode's previous one, update
    k = |Im lambda| c / (2 U), until the k update is below 1e-6 relative.
    """
    if U < 0:
        raise ValueError("airspeed must be non-negative")
    mdl = model if model is not None else _PkModel(geom, stiffness, d_matrix)
    if U == 0.0:
        lam = mdl.still_air_eigen()
        nm = lam.size
        return (
            lam,
            np.full(nm, np.nan),
            np.ones(nm, dtype=int),
            np.ones(nm, dtype=bool),
        )
    if lam_prev is None:
        lam_prev = mdl.still_air_eigen()
    lam_prev = np.asarray(lam_prev, dtype=complex)
    if k_init is None:
        k_init = np.abs(lam_prev.imag) * mdl.geom.chord_m / (2.0 * U)
    k_init = np.asarray(k_init, dtype=float)
    if np.any(k_init[np.isfinite(k_init)] < 0):
        raise ValueError("k_init must be positive for U > 0")

    n_modes = lam_prev.size
    lam_out = np.empty(n_modes, dtype=complex)
    k_out = np.empty(n_modes)
    iters_out = np.empty(n_modes, dtype=int)
    conv_out = np.zeros(n_modes, dtype=bool)
    half_chord_over_U = mdl.geom.chord_m / (2.0 * U)

    for j in range(n_modes):
        k = float(k_init[j])
        if not np.isfinite(k) or k <= 0:
            k = max(abs(lam_prev[j].imag) * half_chord_over_U, K_FLOOR)
        lam = complex(lam_prev[j])
        converged = False
        it = 0
        for it in range(1, K_MAX_ITER + 1):
            ev = np.linalg.eigvals(mdl.companion(U, k))
            lam_new = _select_nearest(ev, lam)
            k_new = abs(lam_new.imag) * half_chord_over_U
            if abs(k_new - k) <= K_CONV_REL * max(k, 1e-12):
                lam, k = lam_new, k_new
                converged = True
                break
            lam, k = lam_new, k_new
        lam_out[j] = lam
        k_out[j] = k
        iters_out[j] = it
        conv_out[j] = converged
    return lam_out, k_out, iters_out, conv_out


def sweep(
    geom: WingGeometry,
    stiffness: StiffnessPair,
    d_matrix: np.ndarray,
    grid: SpeedGrid | None = None,
) -> PkSolution:
    """March the speed grid in ascending order with warm starts."""
    grid = grid if grid is not None else SpeedGrid.default()
    mdl = _PkModel(geom, stiffness, d_matrix)
    lam_prev = mdl.still_air_eigen()
    n_modes = lam_prev.size
    n = len(grid)
    lam = np.empty((n, n_modes), dtype=complex)
    k_red = np.full((n, n_modes), np.nan)
    iterations = np.zeros((n, n_modes), dtype=int)
    converged = np.zeros((n, n_modes), dtype=bool)

    for i, U in enumerate(grid.speeds):
        lam_i, k_i, it_i, conv_i = pk_at_speed(
            geom, stiffness, d_matrix, float(U), lam_prev=lam_prev, model=mdl
        )
        lam[i], k_red[i], iterations[i], converged[i] = lam_i, k_i, it_i, conv_i
        lam_prev = lam_i
    return PkSolution(
        speeds=grid.speeds.copy(),
        lam=lam,
        k_red=k_red,
        iterations=iterations,
        converged=converged,
        chord_m=geom.chord_m,
    )


def detect_onset(
    solution: PkSolution, im_threshold: float = DIVERGENCE_IM_THRESHOLD
) -> OnsetReport:
    """First real-part zero crossings: oscillatory = flutter, otherwise divergence."""
    if solution.speeds.size < 2:
        raise ValueError("need a sweep over at least 2 speeds")
    notes: list[str] = []
    flutter = divergence = None
    flutter_bracket = divergence_bracket = None
    critical = None

    re = solution.lam.real
    im_mag = np.abs(solution.lam.imag)
    if np.any(re[0] > 0):
        j = int(np.argmax(re[0]))
        notes.append("degenerate: positive real part already at the first speed")
        onset_speed = float(solution.speeds[0])
        if im_mag[0, j] > im_threshold:
            return OnsetReport(
                flutter_speed_ms=onset_speed,
                critical_mode_index=j,
                flutter_bracket=(onset_speed, onset_speed),
                notes=tuple(notes),
            )
        return OnsetReport(
            divergence_speed_ms=onset_speed,
            critical_mode_index=j,
            divergence_bracket=(onset_speed, onset_speed),
            notes=tuple(notes),
        )

    for i in range(1, solution.speeds.size):
        for j in range(solution.n_modes):
            if re[i, j] > 0 and re[i - 1, j] <= 0:
                bracket = (float(solution.speeds[i - 1]), float(solution.speeds[i]))
                if im_mag[i, j] > im_threshold:
                    if flutter is None:
                        flutter = float(solution.speeds[i])
                        flutter_bracket = bracket
                        critical = j if critical is None else critical
                else:
                    if divergence is None:
                        divergence = float(solution.speeds[i])
                        divergence_bracket = bracket
                        critical = j if critical is None else critical
        if flutter is not None and divergence is not None:
            break
    if flutter is None and divergence is None:
        notes.append("no instability inside the swept range")
    return OnsetReport(
        flutter_speed_ms=flutter,
        divergence_speed_ms=divergence,
        critical_mode_index=critical,
        flutter_bracket=flutter_bracket,
        divergence_bracket=divergence_bracket,
        notes=tuple(notes),
    )


def refine_onset(
    geom: WingGeometry,
    stiffness: StiffnessPair,
    d_matrix: np.ndarray,
    bracket: tuple[float, float],
    lam_lo: np.ndarray | None = None,
    resolution: float = 0.01,
) -> float:
    """Bisect the sign change of max Re(lambda) down to `resolution`, return midpoint."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if hi < lo:
        raise ValueError("bracket must be ordered (U_lo, U_hi)")
    mdl = _PkModel(geom, stiffness, d_matrix)
    lam_lo_cur, _, _, _ = pk_at_speed(
        geom, stiffness, d_matrix, lo, lam_prev=lam_lo, model=mdl
    )
    if hi == lo:
        return lo
    lam_hi, _, _, _ = pk_at_speed(
        geom, stiffness, d_matrix, hi, lam_prev=lam_lo_cur, model=mdl
    )
    if np.max(lam_lo_cur.real) > 0 or np.max(lam_hi.real) <= 0:
        raise ValueError("bracket does not straddle a real-part sign change")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        lam_mid, _, _, _ = pk_at_speed(
            geom, stiffness, d_matrix, mid, lam_prev=lam_lo_cur, model=mdl
        )
        if np.max(lam_mid.real) > 0:
            hi = mid
        else:
            lo = mid
            lam_lo_cur = lam_mid
    return 0.5 * (lo + hi)


def export_trajectories(solution: PkSolution, path) -> None:
    """CSV rows: U_ms, mode, f_hz, zeta, re_lambda, im_lambda, k, converged."""
    f_hz = solution.frequencies_hz()
    zeta = solution.damping_ratios()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["U_ms", "mode", "f_hz", "zeta", "re_lambda", "im_lambda", "k", "converged"]
        )
        for i, U in enumerate(solution.speeds):
            for j in range(solution.n_modes):
                writer.writerow(
                    [
                        f"{U:.6g}",
                        j + 1,
                        f"{f_hz[i, j]:.9g}",
                        f"{zeta[i, j]:.9g}",
                        f"{solution.lam[i, j].real:.9g}",
                        f"{solution.lam[i, j].imag:.9g}",
                        "" if np.isnan(solution.k_red[i, j]) else f"{solution.k_red[i, j]:.9g}",
                        int(solution.converged[i, j]),
                    ]
                )
