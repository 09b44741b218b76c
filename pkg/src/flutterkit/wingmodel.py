"""Two-DoF binary aeroelastic model of a rectangular flexible wing.

Assumed-modes reduction with y^2 bending and y torsion shape functions gives
2x2 generalized matrices in the coordinates (q1, q2):

    a_m q'' + (rho U b + d) q' + (rho U^2 c_a + e) q = 0

The module assembles a_m, b, c_a, e, builds d from identified modal damping,
evaluates the Theodorsen-based pitch damping derivative, and calibrates
(EI, GJ) against measured still-air frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.special

__all__ = [
    "WingGeometry",
    "RomMatrices",
    "StiffnessPair",
    "ModalTargets",
    "CalibrationError",
    "mass_per_area",
    "assemble_inertia",
    "assemble_aero",
    "stiffness_matrix",
    "theodorsen",
    "m_theta_dot",
    "pivot_parameter",
    "still_air_modes",
    "calibrate_stiffness",
    "damping_matrix",
    "assemble_rom",
]


class CalibrationError(RuntimeError):
    """Stiffness calibration failed to reach the requested residual."""


@dataclass(frozen=True)
class WingGeometry:
    """Planform constants of the rectangular equivalent wing."""

    chord_m: float
    span_m: float
    flexural_axis_fraction: float
    lift_curve_slope: float
    eccentricity: float
    total_mass_kg: float
    air_density: float = 1.225

    def __post_init__(self):
        if self.chord_m <= 0 or self.span_m <= 0:
            raise ValueError("chord and span must be positive")
        if not (0.0 < self.flexural_axis_fraction < 1.0):
            raise ValueError("flexural_axis_fraction must lie in (0, 1)")
        if self.lift_curve_slope < 0:
            raise ValueError("lift_curve_slope must be non-negative")
        if self.total_mass_kg <= 0 or self.air_density <= 0:
            raise ValueError("mass and air density must be positive")

    @property
    def flexural_axis_m(self) -> float:
        return self.flexural_axis_fraction * self.chord_m


@dataclass(frozen=True)
class StiffnessPair:
    """Spanwise-constant flexural and torsional stiffness, N m^2."""

    EI: float
    GJ: float

    def __post_init__(self):
        if self.EI <= 0 or self.GJ <= 0:
            raise ValueError("EI and GJ must be positive")


@dataclass(frozen=True)
class ModalTargets:
    """Measured still-air bending/torsion frequencies and damping ratios."""

    bending_hz: float
    torsion_hz: float
    bending_zeta: float
    torsion_zeta: float

    def __post_init__(self):
        if not (self.torsion_hz > self.bending_hz > 0.0):
            raise ValueError("need torsion_hz > bending_hz > 0")
        # zeta = 0 admitted: it reduces the model to the zero-damping case
        for z in (self.bending_zeta, self.torsion_zeta):
            if not (0.0 <= z < 1.0):
                raise ValueError("damping ratios must lie in [0, 1)")

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * np.array([self.bending_hz, self.torsion_hz])

    @property
    def zetas(self) -> np.ndarray:
        return np.array([self.bending_zeta, self.torsion_zeta])


@dataclass(frozen=True)
class RomMatrices:
    """The five 2x2 blocks of the governing equation (b, c_a unscaled)."""

    a_m: np.ndarray
    b: np.ndarray
    c_a: np.ndarray
    d: np.ndarray
    e_stiff: np.ndarray

    def __post_init__(self):
        for name in ("a_m", "b", "c_a", "d", "e_stiff"):
            mat = np.asarray(getattr(self, name), dtype=float)
            if mat.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
            object.__setattr__(self, name, mat)
        if not np.allclose(self.a_m, self.a_m.T, rtol=1e-12, atol=1e-12):
            raise ValueError("a_m must be symmetric")
        if np.any(np.linalg.eigvalsh(self.a_m) <= 0):
            raise ValueError("a_m must be positive definite")


def mass_per_area(geom: WingGeometry) -> float:
    """Wing mass divided by planform area b_w * cbar, kg/m^2."""
    return geom.total_mass_kg / (geom.span_m * geom.chord_m)


def assemble_inertia(geom: WingGeometry) -> np.ndarray:
    """Generalized inertia from the uniform-mass assumed-modes integrals."""
    m = mass_per_area(geom)
    c = geom.chord_m
    b = geom.span_m
    xf = geom.flexural_axis_m
    a11 = c * b**5 / 5.0
    a12 = (b**4 / 4.0) * (c**2 / 2.0 - c * xf)
    a22 = (b**3 / 3.0) * (c**3 / 3.0 - c**2 * xf + c * xf**2)
    return m * np.array([[a11, a12], [a12, a22]])


def assemble_aero(geom: WingGeometry, M_theta_dot: float) -> tuple[np.ndarray, np.ndarray]:
    """Aerodynamic damping and stiffness blocks, before rho U / rho U^2 scaling."""
    c = geom.chord_m
    b = geom.span_m
    aw = geom.lift_curve_slope
    e = geom.eccentricity
    b_mat = np.array(
        [
            [c * aw * b**5 / 10.0, 0.0],
            [-(c**2) * e * aw * b**4 / 8.0, -(c**3) * b**3 * M_theta_dot / 24.0],
        ]
    )
    c_mat = np.array(
        [
            [0.0, c * aw * b**4 / 8.0],
            [0.0, -(c**2) * e * aw * b**3 / 6.0],
        ]
    )
    return b_mat, c_mat


def stiffness_matrix(geom: WingGeometry, stiffness: StiffnessPair) -> np.ndarray:
    """Diagonal generalized stiffness diag(4 EI b_w, GJ b_w)."""
    return np.diag([4.0 * stiffness.EI * geom.span_m, stiffness.GJ * geom.span_m])


def theodorsen(k: float) -> complex:
    """Theodorsen's function C(k) = H1(k) / (H1(k) + i H0(k)), Hankel 2nd kind.

    k = 0 returns the exact quasi-steady limit 1.
    """
    if k < 0:
        raise ValueError("reduced frequency must be non-negative")
    if k == 0.0:
        return 1.0 + 0.0j
    h1 = scipy.special.hankel2(1, k)
    h0 = scipy.special.hankel2(0, k)
    return complex(h1 / (h1 + 1j * h0))


def pivot_parameter(geom: WingGeometry) -> float:
    """Flexural-axis offset from midchord in semichords: 2*fraction - 1."""
    return 2.0 * geom.flexural_axis_fraction - 1.0


def m_theta_dot(k: float, a: float, lift_curve_slope: float) -> float:
    """Unsteady pitch damping derivative at reduced frequency k.

    The 2*pi lift-slope prefactor of thin-airfoil theory is replaced by the
    wing's actual lift curve slope.
    """
    if k <= 0:
        raise ValueError("reduced frequency must be positive")
    C = theodorsen(k)
    F, G = C.real, C.imag
    return lift_curve_slope * (
        -(k / 2.0) * (0.5 - a)
        + k * F * (a + 0.5) * (0.5 - a)
        + (G / k) * (0.5 + a)
    )


def still_air_modes(a_m: np.ndarray, e_stiff: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Undamped still-air frequencies (rad/s, ascending) and mass-normalized shapes.

    Solves e phi = w^2 a_m phi; returns (omegas, Phi) with Phi^T a_m Phi = I.
    """
    a_m = np.asarray(a_m, dtype=float)
    e_stiff = np.asarray(e_stiff, dtype=float)
    if np.any(np.linalg.eigvalsh(a_m) <= 0):
        raise ValueError("inertia matrix must be positive definite")
    w2, Phi = scipy.linalg.eigh(e_stiff, a_m)
    if np.any(w2 <= 0):
        raise ValueError("stiffness matrix is not positive definite on this basis")
    return np.sqrt(w2), Phi


def _frequencies_for(geom: WingGeometry, EI: float, GJ: float, a_m: np.ndarray) -> np.ndarray:
    """Closed-form sorted still-air frequencies for a trial stiffness pair."""
    e11 = 4.0 * EI * geom.span_m
    e22 = GJ * geom.span_m
    # char poly of the 2x2 pencil det(e - w^2 a) with diagonal e
    det_a = a_m[0, 0] * a_m[1, 1] - a_m[0, 1] ** 2
    tr = a_m[1, 1] * e11 + a_m[0, 0] * e22
    disc = tr * tr - 4.0 * det_a * e11 * e22
    disc = max(disc, 0.0)
    root = np.sqrt(disc)
    w2 = np.array([(tr - root), (tr + root)]) / (2.0 * det_a)
    return np.sqrt(np.maximum(w2, 0.0))


def calibrate_stiffness(
    targets: ModalTargets,
    geom: WingGeometry,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> StiffnessPair:
    """Fit (EI, GJ) so still-air frequencies match the measured targets.

    Nelder-Mead on log10(EI, GJ), started from the closed-form
    bending-dominated root of the characteristic polynomial. The 2-unknown,
    2-target problem is effectively exactly solvable, so the fit residual is
    driven to the optimizer tolerance. The sorted-frequency map is 2-to-1
    (the polynomial admits a companion root with the mode ratios swapped);
    calibration deterministically returns the branch with
    e11/a11 < e22/a22, which recovers a generating pair whenever its first
    mode is bending-dominated.
    """
    a_m = assemble_inertia(geom)
    w_targets = targets.omegas
    det_a = float(a_m[0, 0] * a_m[1, 1] - a_m[0, 1] ** 2)
    sum_w2 = float(np.sum(w_targets**2))
    prod_w2 = float(np.prod(w_targets**2))
    disc = (det_a * sum_w2) ** 2 - 4.0 * a_m[0, 0] * a_m[1, 1] * det_a * prod_w2
    if disc >= 0.0:
        e11 = (det_a * sum_w2 - np.sqrt(disc)) / (2.0 * a_m[1, 1])
        e22 = (det_a * sum_w2 - a_m[1, 1] * e11) / a_m[0, 0]
        EI0 = e11 / (4.0 * geom.span_m)
        GJ0 = e22 / geom.span_m
    else:
        # target spectrum is outside the reachable set; start from the
        # decoupled guess and let the residual check report the gap
        EI0 = w_targets[0] ** 2 * a_m[0, 0] / (4.0 * geom.span_m)
        GJ0 = w_targets[1] ** 2 * a_m[1, 1] / geom.span_m

    def objective(logx):
        EI, GJ = 10.0 ** logx[0], 10.0 ** logx[1]
        w = _frequencies_for(geom, EI, GJ, a_m)
        return float(np.sum((w - w_targets) ** 2))

    res = scipy.optimize.minimize(
        objective,
        x0=np.log10([EI0, GJ0]),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": tol, "maxiter": max_iter},
    )
    EI, GJ = 10.0 ** res.x[0], 10.0 ** res.x[1]
    w_fit = _frequencies_for(geom, EI, GJ, a_m)
    rel = np.max(np.abs(w_fit - w_targets) / w_targets)
    if rel > 1e-3:
        raise CalibrationError(
            f"calibration residual {rel:.3e} exceeds 0.1% (optimizer: {res.message})"
        )
    return StiffnessPair(EI=float(EI), GJ=float(GJ))


def damping_matrix(Phi: np.ndarray, targets: ModalTargets) -> np.ndarray:
    """Viscous damping from the uncoupled modal damping assumption.

    With mass-normalized shapes, d_n = diag(2 zeta_n omega_n) and
    d = Phi^-T d_n Phi^-1.
    """
    Phi = np.asarray(Phi, dtype=float)
    if abs(np.linalg.det(Phi)) < 1e-14:
        raise ValueError("singular mode shape matrix")
    d_n = np.diag(2.0 * targets.zetas * targets.omegas)
    Pinv = np.linalg.inv(Phi)
    d = Pinv.T @ d_n @ Pinv
    return 0.5 * (d + d.T)  # symmetrize roundoff


def assemble_rom(
    geom: WingGeometry,
    stiffness: StiffnessPair,
    targets: ModalTargets,
    M_theta_dot: float,
) -> RomMatrices:
    """All five governing-equation blocks for one flight condition's k."""
    a_m = assemble_inertia(geom)
    e_stiff = stiffness_matrix(geom, stiffness)
    _, Phi = still_air_modes(a_m, e_stiff)
    d = damping_matrix(Phi, targets)
    b_mat, c_mat = assemble_aero(geom, M_theta_dot)
    return RomMatrices(a_m=a_m, b=b_mat, c_a=c_mat, d=d, e_stiff=e_stiff)
