"""Fast Relaxed Vector Fitting for SIMO frequency-response data.

Rational approximation H(s) ~ sum_n r_n/(s - p_n) + d + s e with common poles
across channels. Pole relocation solves the sigma(s)H(s) least-squares problem
in a real-coefficient pair basis, accelerated by keeping only the QR block
that couples the sigma unknowns; the relaxed variant frees sigma's constant
term and pins a weighted sum of Re(sigma) instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .frf import FrfDataset, Mode, ModalParameterSet, pole_to_modal

__all__ = [
    "VfConfig",
    "VfResult",
    "init_poles",
    "pole_relocation_step",
    "residue_identification",
    "frvf_identify",
]

RELAX_DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class VfConfig:
    order: int = 6
    max_iterations: int = 30
    pole_shift_tolerance: float = 1e-6
    enforce_stable_poles: bool = True
    include_d_term: bool = True
    include_e_term: bool = True
    relaxed: bool = True

    def __post_init__(self):
        if self.order < 2 or self.order % 2 != 0:
            raise ValueError("order must be an even integer >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.pole_shift_tolerance <= 0:
            raise ValueError("pole_shift_tolerance must be positive")


@dataclass(frozen=True)
class VfResult:
    poles: np.ndarray
    residues: np.ndarray
    d_term: np.ndarray
    e_term: np.ndarray
    iterations_used: int
    rms_fit_error: float
    converged: bool
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not (np.isfinite(self.rms_fit_error) and self.rms_fit_error >= 0):
            raise ValueError("rms_fit_error must be finite and non-negative")


def init_poles(order: int, band_hz: tuple[float, float]) -> np.ndarray:
    """Conjugate starting pairs -beta/100 +- i beta, beta linear over the band.

    Endpoints included for two or more pairs; a single pair sits at the band
    midpoint.
    """
    f_lo, f_hi = band_hz
    if order < 2 or order % 2 != 0:
        raise ValueError("order must be an even integer >= 2")
    if not (0.0 < f_lo < f_hi):
        raise ValueError("need 0 < f_lo < f_hi")
    n_pairs = order // 2
    if n_pairs == 1:
        betas = np.array([np.pi * (f_lo + f_hi)])  # 2*pi * midpoint
    else:
        betas = 2.0 * np.pi * np.linspace(f_lo, f_hi, n_pairs)
    poles = np.empty(order, dtype=complex)
    poles[0::2] = -betas / 100.0 + 1j * betas
    poles[1::2] = -betas / 100.0 - 1j * betas
    return poles


def _canonicalize(poles: np.ndarray) -> np.ndarray:
    """Order poles as [real ascending, then pairs (p, conj p) by |Im| ascending]."""
    poles = np.asarray(poles, dtype=complex)
    real = sorted([p.real for p in poles if p.imag == 0.0])
    upper = sorted((p for p in poles if p.imag > 0.0), key=lambda p: (abs(p.imag), p.real))
    n_lower = sum(1 for p in poles if p.imag < 0.0)
    if n_lower != len(upper):
        raise ValueError("poles are not closed under conjugation")
    out = [complex(r) for r in real]
    for p in upper:
        out.extend([p, p.conjugate()])
    return np.array(out, dtype=complex)


def _structure(poles: np.ndarray) -> tuple[list[complex], list[complex]]:
    """Split canonical poles into (real poles, upper-half pair representatives)."""
    real = [p for p in poles if p.imag == 0.0]
    pairs = [p for p in poles if p.imag > 0.0]
    return real, pairs


def _basis_columns(poles: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Complex basis columns for the real-coefficient formulation.

    One column per real pole (1/(s-p)); two per conjugate pair:
    1/(s-p) + 1/(s-conj p) and i/(s-p) - i/(s-conj p).
    """
    real, pairs = _structure(poles)
    cols = []
    for p in real:
        cols.append(1.0 / (s - p))
    for p in pairs:
        inv_a = 1.0 / (s - p)
        inv_b = 1.0 / (s - p.conjugate())
        cols.append(inv_a + inv_b)
        cols.append(1j * (inv_a - inv_b))
    return np.stack(cols, axis=1) if cols else np.empty((s.size, 0), dtype=complex)


def _sigma_state_space(poles: np.ndarray, coeffs: np.ndarray, d_hat: float):
    """Real (A, b, c) with sigma(s) = d_hat + c (sI - A)^-1 b in the pair basis."""
    real, pairs = _structure(poles)
    n = len(real) + 2 * len(pairs)
    A = np.zeros((n, n))
    b = np.zeros(n)
    c = np.zeros(n)
    idx = 0
    ci = 0
    for p in real:
        A[idx, idx] = p.real
        b[idx] = 1.0
        c[idx] = coeffs[ci]
        idx += 1
        ci += 1
    for p in pairs:
        x, y = p.real, p.imag
        A[idx : idx + 2, idx : idx + 2] = [[x, y], [-y, x]]
        b[idx] = 2.0
        c[idx] = coeffs[ci]
        c[idx + 1] = coeffs[ci + 1]
        idx += 2
        ci += 2
    return A, b, c


def _coeffs_to_residues(poles: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Real pair-basis coefficients back to complex residues per pole."""
    real, pairs = _structure(poles)
    res = np.empty(len(poles), dtype=complex)
    ci = 0
    k = 0
    for _ in real:
        res[k] = coeffs[ci]
        ci += 1
        k += 1
    for _ in pairs:
        r = complex(coeffs[ci], coeffs[ci + 1])
        res[k] = r
        res[k + 1] = r.conjugate()
        ci += 2
        k += 2
    return res


def _stack_real(M: np.ndarray) -> np.ndarray:
    return np.vstack([M.real, M.imag])


def pole_relocation_step(
    frf: FrfDataset,
    poles: np.ndarray,
    relaxed: bool = True,
    enforce_stable_poles: bool = True,
    include_d_term: bool = True,
    include_e_term: bool = True,
) -> np.ndarray:
    """One sigma-iteration: returns the relocated pole set (conjugate-closed).

    Per channel, the least-squares block coupling the sigma unknowns is
    extracted via QR; the stacked blocks plus the relaxation row are solved
    jointly, and the new poles are the zeros of sigma. A numerically zero
    relaxation term triggers one unrelaxed retry; a rank-deficient block is
    reported as a warning (over-parameterized order) and solved minimum-norm.
    """
    poles = _canonicalize(poles)
    if frf.n_bins < 2:
        raise ValueError("FRF dataset is too small")
    if not np.any(np.abs(frf.responses) > 0):
        raise ValueError("FRF data is identically zero")
    s = 1j * frf.grid.values_rad
    phi = _basis_columns(poles, s)
    n_sig = phi.shape[1]

    f_cols = [phi]
    if include_d_term:
        f_cols.append(np.ones((s.size, 1), dtype=complex))
    if include_e_term:
        f_cols.append(s[:, np.newaxis])
    phi_f = np.concatenate(f_cols, axis=1)
    n_f = phi_f.shape[1]

    weight = np.sqrt(np.sum(np.abs(frf.responses) ** 2)) / frf.n_bins

    def solve_sigma(use_relaxed: bool) -> tuple[np.ndarray, float]:
        n_unknown = n_sig + (1 if use_relaxed else 0)
        blocks = []
        rhs_parts = []
        for ch in range(frf.n_channels):
            H = frf.responses[ch]
            sig_cols = -phi * H[:, np.newaxis]
            if use_relaxed:
                sig_cols = np.concatenate([sig_cols, -H[:, np.newaxis]], axis=1)
                rhs_ch = np.zeros(2 * s.size)
            else:
                rhs_ch = _stack_real(H[:, np.newaxis])[:, 0]
            A_ch = np.concatenate([_stack_real(phi_f), _stack_real(sig_cols)], axis=1)
            Q, R = scipy.linalg.qr(A_ch, mode="economic")
            blocks.append(R[n_f:, n_f:])
            rhs_parts.append(Q[:, n_f:].T @ rhs_ch)
        A_sys = np.vstack(blocks)
        rhs = np.concatenate(rhs_parts)
        if use_relaxed:
            row = np.empty(n_unknown)
            row[:n_sig] = weight * np.sum(phi.real, axis=0)
            row[n_sig] = weight * s.size
            A_sys = np.vstack([A_sys, row])
            rhs = np.concatenate([rhs, [weight * s.size]])
        sol, _, rank, _ = scipy.linalg.lstsq(A_sys, rhs, lapack_driver="gelsd")
        if rank < n_unknown:
            warnings.warn(
                f"sigma least-squares block rank {rank} < {n_unknown}: "
                "order looks over-parameterized for this data",
                RuntimeWarning,
                stacklevel=3,
            )
        if use_relaxed:
            return sol[:n_sig], float(sol[n_sig])
        return sol, 1.0

    if relaxed:
        coeffs, d_hat = solve_sigma(True)
        if abs(d_hat) < RELAX_DEGENERACY_TOL:
            coeffs, d_hat = solve_sigma(False)
    else:
        coeffs, d_hat = solve_sigma(False)

    A, b, c = _sigma_state_space(poles, coeffs, d_hat)
    new_poles = np.linalg.eigvals(A - np.outer(b, c) / d_hat)
    # numerically tiny imaginary leftovers on essentially real zeros
    new_poles = np.where(
        np.abs(new_poles.imag) < 1e-9 * np.maximum(np.abs(new_poles), 1.0),
        new_poles.real + 0.0j,
        new_poles,
    )
    if enforce_stable_poles:
        new_poles = np.where(
            new_poles.real > 0, -new_poles.real + 1j * new_poles.imag, new_poles
        )
    return _canonicalize(new_poles)


def residue_identification(
    frf: FrfDataset, poles: np.ndarray, config: VfConfig
) -> VfResult:
    """Second stage: residues and d/e terms per channel with the poles frozen."""
    poles = _canonicalize(poles)
    s = 1j * frf.grid.values_rad
    phi = _basis_columns(poles, s)
    n_sig = phi.shape[1]
    cols = [_stack_real(phi)]
    if config.include_d_term:
        cols.append(_stack_real(np.ones((s.size, 1), dtype=complex)))
    if config.include_e_term:
        cols.append(_stack_real(s[:, np.newaxis]))
    A_sys = np.concatenate(cols, axis=1)

    cond = np.linalg.cond(A_sys)
    warn_list: list[str] = []
    if cond > 1e12:
        msg = f"residue basis nearly singular (cond ~ {cond:.2e}); poles may be duplicated"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        warn_list.append(msg)

    p = frf.n_channels
    residues = np.empty((p, len(poles)), dtype=complex)
    d_term = np.zeros(p)
    e_term = np.zeros(p)
    fit = np.empty_like(frf.responses)
    for ch in range(p):
        rhs = np.concatenate([frf.responses[ch].real, frf.responses[ch].imag])
        sol, *_ = scipy.linalg.lstsq(A_sys, rhs, lapack_driver="gelsd")
        residues[ch] = _coeffs_to_residues(poles, sol[:n_sig])
        off = n_sig
        if config.include_d_term:
            d_term[ch] = sol[off]
            off += 1
        if config.include_e_term:
            e_term[ch] = sol[off]
        fit[ch] = (
            phi @ sol[:n_sig]
            + (d_term[ch] if config.include_d_term else 0.0)
            + (e_term[ch] * s if config.include_e_term else 0.0)
        )
    data_rms = np.sqrt(np.mean(np.abs(frf.responses) ** 2))
    err_rms = np.sqrt(np.mean(np.abs(fit - frf.responses) ** 2))
    rms_fit_error = float(err_rms / data_rms) if data_rms > 0 else float(err_rms)
    return VfResult(
        poles=poles,
        residues=residues,
        d_term=d_term,
        e_term=e_term,
        iterations_used=0,
        rms_fit_error=rms_fit_error,
        converged=True,
        warnings=tuple(warn_list),
    )


def _max_pole_shift(old: np.ndarray, new: np.ndarray) -> float:
    shift = 0.0
    for p in old:
        d = np.min(np.abs(new - p)) / max(abs(p), 1e-300)
        shift = max(shift, float(d))
    return shift


def frvf_identify(
    frf: FrfDataset,
    config: VfConfig | None = None,
    band_hz: tuple[float, float] | None = None,
) -> tuple[VfResult, ModalParameterSet]:
    """Full FRVF run: init poles, relocate to convergence, identify residues.

    Non-convergence is reported through the result flags, not raised; the
    returned modal set keeps stable oscillatory poles inside the band, with
    shapes recovered from the residue columns in the receptance convention
    (shape = residue * 2i omega_d).
    """
    config = config if config is not None else VfConfig()
    band = band_hz if band_hz is not None else frf.grid.band_hz
    poles = init_poles(config.order, band)
    iterations = 0
    converged = False
    for iterations in range(1, config.max_iterations + 1):
        new_poles = pole_relocation_step(
            frf,
            poles,
            relaxed=config.relaxed,
            enforce_stable_poles=config.enforce_stable_poles,
            include_d_term=config.include_d_term,
            include_e_term=config.include_e_term,
        )
        shift = _max_pole_shift(poles, new_poles)
        poles = new_poles
        if shift < config.pole_shift_tolerance:
            converged = True
            break
    result = residue_identification(frf, poles, config)
    result = VfResult(
        poles=result.poles,
        residues=result.residues,
        d_term=result.d_term,
        e_term=result.e_term,
        iterations_used=iterations,
        rms_fit_error=result.rms_fit_error,
        converged=converged,
        warnings=result.warnings,
    )

    modes = []
    for idx, pole in enumerate(result.poles):
        if pole.imag <= 0 or pole.real >= 0:
            continue
        f, zeta = pole_to_modal(complex(pole))
        if not (band[0] <= f <= band[1]) or not (0.0 < zeta < 1.0):
            continue
        shape = result.residues[:, idx] * (2.0j * abs(pole.imag))
        modes.append((f, zeta, complex(pole), shape))
    modes.sort(key=lambda m: m[0])
    deduped = []
    for m in modes:
        if deduped and abs(m[0] - deduped[-1][0]) <= 1e-6 * deduped[-1][0]:
            continue
        deduped.append(m)
    modal_set = ModalParameterSet(
        modes=tuple(
            Mode(frequency_hz=f, damping_ratio=z, pole=pl, shape=sh)
            for f, z, pl, sh in deduped
        ),
        source_method="FRVF",
    )
    return result, modal_set
