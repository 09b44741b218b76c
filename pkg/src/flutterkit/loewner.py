"""Loewner Framework identification from tangential frequency-response data.

Measured bins are split into left and right interpolation sets, closed under
conjugation, and assembled into the Loewner pencil (L, Ls). A rank-revealing
SVD of the shifted pencil gives projection bases whose compression yields a
descriptor realization E, A, B, C interpolating the data. Conjugate-adjacent
ordering lets a per-pair unitary turn the pencil real before projection.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .frf import FrfDataset, ModalParameterSet, StateSpaceRealization, realization_to_modal

__all__ = [
    "LfConfig",
    "TangentialData",
    "LoewnerPencil",
    "partition_data",
    "build_pencil",
    "estimate_order",
    "realize",
    "lf_identify",
    "sweep_identify",
]

REALNESS_TOL = 1e-10
DENSE_SVD_LIMIT = 512


@dataclass(frozen=True)
class LfConfig:
    order: int | None = None
    svd_tolerance: float = 1e-10
    partitioning: str = "interleaved"
    direction_seed: int = 0

    def __post_init__(self):
        if self.order is not None and self.order < 1:
            raise ValueError("explicit order must be >= 1")
        if not (0.0 < self.svd_tolerance < 1.0):
            raise ValueError("svd_tolerance must lie in (0, 1)")
        if self.partitioning not in ("interleaved", "split-half"):
            raise ValueError("partitioning must be 'interleaved' or 'split-half'")


@dataclass(frozen=True)
class TangentialData:
    """Right data (lambda_i, r_i, w_i) and left data (mu_j, l_j, v_j).

    Points are stored with each +i omega immediately followed by its
    conjugate, which the real transformation in realize() relies on.
    """

    lam: np.ndarray        # (rho,) complex
    r_dirs: np.ndarray     # (m, rho)
    w_vecs: np.ndarray     # (p, rho)
    mu: np.ndarray         # (v,) complex
    l_dirs: np.ndarray     # (v, p)
    v_vecs: np.ndarray     # (v, m)

    def __post_init__(self):
        if np.intersect1d(self.lam, self.mu).size:
            raise ValueError("left and right point sets must be disjoint")
        for pts in (self.lam, self.mu):
            bag = sorted(pts, key=lambda z: (z.real, z.imag))
            conj_bag = sorted(np.conj(pts), key=lambda z: (z.real, z.imag))
            if not np.allclose(bag, conj_bag, rtol=0, atol=0):
                raise ValueError("point sets must be closed under conjugation")


@dataclass(frozen=True)
class LoewnerPencil:
    L: np.ndarray
    Ls: np.ndarray
    V: np.ndarray
    W: np.ndarray
    data: TangentialData
    L_real: np.ndarray = field(repr=False, default=None)
    Ls_real: np.ndarray = field(repr=False, default=None)
    V_real: np.ndarray = field(repr=False, default=None)
    W_real: np.ndarray = field(repr=False, default=None)


def partition_data(frf: FrfDataset, config: LfConfig | None = None) -> TangentialData:
    """Split bins into right/left interpolation sets with conjugate closure.

    Interleaved assignment alternates bins (even to right, odd to left);
    split-half sends the lower half right and the upper half left. Right
    directions are scalar ones (single input); left directions are unit-norm
    real rows drawn from direction_seed so conjugate data stays conjugate.
    """
    config = config if config is not None else LfConfig()
    if frf.n_bins < 4:
        raise ValueError("need at least 4 frequency bins to partition")
    s = 1j * frf.grid.values_rad
    idx = np.arange(frf.n_bins)
    if config.partitioning == "interleaved":
        right_idx, left_idx = idx[0::2], idx[1::2]
    else:
        half = frf.n_bins // 2
        right_idx, left_idx = idx[:half], idx[half:]

    p = frf.n_channels

    lam = np.empty(2 * right_idx.size, dtype=complex)
    lam[0::2] = s[right_idx]
    lam[1::2] = np.conj(s[right_idx])
    w_vecs = np.empty((p, lam.size), dtype=complex)
    w_vecs[:, 0::2] = frf.responses[:, right_idx]
    w_vecs[:, 1::2] = np.conj(frf.responses[:, right_idx])
    r_dirs = np.ones((1, lam.size), dtype=complex)

    rng = np.random.default_rng(config.direction_seed)
    raw = rng.standard_normal((left_idx.size, p))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)

    mu = np.empty(2 * left_idx.size, dtype=complex)
    mu[0::2] = s[left_idx]
    mu[1::2] = np.conj(s[left_idx])
    l_dirs = np.empty((mu.size, p), dtype=complex)
    l_dirs[0::2] = raw
    l_dirs[1::2] = raw
    v_meas = np.einsum("jp,pj->j", raw.astype(complex), frf.responses[:, left_idx])
    v_vecs = np.empty((mu.size, 1), dtype=complex)
    v_vecs[0::2, 0] = v_meas
    v_vecs[1::2, 0] = np.conj(v_meas)

    return TangentialData(
        lam=lam, r_dirs=r_dirs, w_vecs=w_vecs, mu=mu, l_dirs=l_dirs, v_vecs=v_vecs
    )


def _real_rows(M: np.ndarray) -> np.ndarray:
    out = np.empty_like(M)
    out[0::2] = (M[0::2] + M[1::2]) / np.sqrt(2.0)
    out[1::2] = 1j * (M[0::2] - M[1::2]) / np.sqrt(2.0)
    return out


def _real_cols(M: np.ndarray) -> np.ndarray:
    out = np.empty_like(M)
    out[:, 0::2] = (M[:, 0::2] + M[:, 1::2]) / np.sqrt(2.0)
    out[:, 1::2] = 1j * (M[:, 1::2] - M[:, 0::2]) / np.sqrt(2.0)
    return out


def _take_real(M: np.ndarray, what: str) -> np.ndarray:
    fro = np.linalg.norm(M)
    if fro > 0 and np.abs(M.imag).max() > REALNESS_TOL * fro:
        raise RuntimeError(f"{what} failed to become real under the pair transform")
    return np.ascontiguousarray(M.real)


def build_pencil(td: TangentialData) -> LoewnerPencil:
    """Assemble L, Ls, V, W plus their real forms from tangential data."""
    denom = td.mu[:, np.newaxis] - td.lam[np.newaxis, :]
    if np.abs(denom).min() == 0.0:
        raise ValueError("a left point coincides with a right point")
    vr = td.v_vecs @ td.r_dirs                    # (v, rho)
    lw = td.l_dirs @ td.w_vecs                    # (v, rho)
    L = (vr - lw) / denom
    Ls = (td.mu[:, np.newaxis] * vr - td.lam[np.newaxis, :] * lw) / denom
    V = td.v_vecs
    W = td.w_vecs
    L_real = _take_real(_real_cols(_real_rows(L)), "Loewner matrix")
    Ls_real = _take_real(_real_cols(_real_rows(Ls)), "shifted Loewner matrix")
    V_real = _take_real(_real_rows(V), "left value block")
    W_real = _take_real(_real_cols(W), "right value block")
    return LoewnerPencil(
        L=L, Ls=Ls, V=V, W=W, data=td,
        L_real=L_real, Ls_real=Ls_real, V_real=V_real, W_real=W_real,
    )


RANK_SVD_CAP = 64


def _top_singular_values(M: np.ndarray, k_max: int) -> np.ndarray:
    """Leading singular values, descending; iterative path for large pencils."""
    if min(M.shape) <= DENSE_SVD_LIMIT:
        return scipy.linalg.svdvals(M)
    k = min(k_max, min(M.shape) - 1)
    vals = scipy.sparse.linalg.svds(
        M, k=k, return_singular_vectors=False, v0=np.ones(min(M.shape))
    )
    return np.sort(vals)[::-1]


def _rank_counts(pencil: LoewnerPencil, tol: float) -> tuple[int, int]:
    """(threshold count, largest-gap count) over the block row [L Ls]."""
    stacked = np.hstack([pencil.L_real, pencil.Ls_real])
    sv = _top_singular_values(stacked, k_max=RANK_SVD_CAP)
    if sv.size == 0 or sv[0] == 0.0:
        raise ValueError("pencil is identically zero")
    k_tol = int(np.sum(sv > tol * sv[0]))
    positive = sv[sv > 0]
    if positive.size > 1:
        ratios = positive[:-1] / positive[1:]
        k_gap = int(np.argmax(ratios)) + 1
    else:
        k_gap = 1
    return k_tol, k_gap


def estimate_order(pencil: LoewnerPencil, tol: float = 1e-10) -> int:
    """Numerical rank of the block row [L Ls] via relative SVD threshold.

    When a clean threshold count and the largest-gap count disagree by more
    than 2 (noisy data blurs the tail), the gap location wins with a warning.
    """
    k_tol, k_gap = _rank_counts(pencil, tol)
    if abs(k_tol - k_gap) > 2:
        warnings.warn(
            f"singular-value threshold suggests order {k_tol} but the largest "
            f"gap sits at {k_gap}; using the gap (noisy data)",
            RuntimeWarning,
            stacklevel=2,
        )
        return k_gap
    return k_tol


def _shifted_svd(pencil: LoewnerPencil, k_top: int):
    """SVD factors of (zeta L - Ls) at zeta = first left point, descending order."""
    zeta = pencil.data.mu[0]
    shifted = zeta * pencil.L_real - pencil.Ls_real
    if min(shifted.shape) <= DENSE_SVD_LIMIT:
        Y, sv, Xh = scipy.linalg.svd(shifted, full_matrices=False)
        return Y[:, :k_top], sv[:k_top], Xh[:k_top].conj().T
    k = min(k_top, min(shifted.shape) - 1)
    Y, sv, Xh = scipy.sparse.linalg.svds(shifted, k=k, v0=np.ones(min(shifted.shape)))
    order = np.argsort(sv)[::-1]
    return Y[:, order], sv[order], Xh[order].conj().T


def realize(
    pencil: LoewnerPencil, order: int, _svd: tuple | None = None
) -> StateSpaceRealization:
    """Compress the pencil onto its dominant SVD subspaces of a given order.

    E = -Y* L X, A = -Y* Ls X, B = Y* V, C = W X with Y, X the leading
    left/right singular vectors of the shifted pencil; bases are re-realified
    so the output matrices are real.
    """
    v, rho = pencil.L.shape
    if not (1 <= order <= min(v, rho)):
        raise ValueError("order must satisfy 1 <= order <= min(v, rho)")
    Y, _, X = _svd if _svd is not None else _shifted_svd(pencil, order)
    Yk, Xk = Y[:, :order], X[:, :order]

    def realify(basis: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(basis):
            stacked = np.hstack([basis.real, basis.imag])
            U, _, _ = scipy.linalg.svd(stacked, full_matrices=False)
            return U[:, :order]
        return basis

    Yr, Xr = realify(Yk), realify(Xk)
    E = -(Yr.T @ pencil.L_real @ Xr)
    A = -(Yr.T @ pencil.Ls_real @ Xr)
    B = Yr.T @ pencil.V_real
    C = pencil.W_real @ Xr
    return StateSpaceRealization(E=E, A=A, B=B, C=C)


def sweep_identify(
    frf: FrfDataset,
    config: LfConfig | None = None,
    band_hz: tuple[float, float] | None = None,
    max_order: int = 32,
):
    """Order-parameterized identification closure sharing one pencil and SVD.

    The pencil and the shifted-pencil SVD dominate the cost and do not depend
    on the realization order, so a stabilization sweep should build them once.
    The returned callable has the (frf, order) signature the diagram builder
    expects; the frf argument is accepted for that signature and ignored.
    """
    config = config if config is not None else LfConfig()
    band = band_hz if band_hz is not None else frf.grid.band_hz
    pencil = build_pencil(partition_data(frf, config))
    k_cap = min(max_order, min(pencil.L.shape))
    svd_cache = _shifted_svd(pencil, k_cap)

    def identify(_frf, order: int) -> ModalParameterSet:
        if order > k_cap:
            raise ValueError(f"order {order} exceeds the cached SVD size {k_cap}")
        rk = realize(pencil, order, _svd=svd_cache)
        modal, _ = realization_to_modal(rk, band, source_method="LF")
        return modal

    return identify


DEFAULT_ORDER_SWEEP = tuple(range(6, 25, 2))


def lf_identify(
    frf: FrfDataset,
    config: LfConfig | None = None,
    band_hz: tuple[float, float] | None = None,
    orders=None,
) -> tuple[StateSpaceRealization, ModalParameterSet]:
    """Partition, build the pencil, realize, and extract in-band modes.

    An explicit config.order realizes once at that order. Automatic order
    inspects the singular spectrum: a clean rank boundary gets a single
    realization there, while an ambiguous one (noise) triggers realization
    over a sweep (default orders 6..24 step 2) consolidated with the
    stabilization-diagram machinery, so noise cannot hide a mode behind one
    bad rank call.
    """
    config = config if config is not None else LfConfig()
    band = band_hz if band_hz is not None else frf.grid.band_hz
    td = partition_data(frf, config)
    pencil = build_pencil(td)
    if config.order is not None:
        realization = realize(pencil, config.order)
        modal, _ = realization_to_modal(realization, band, source_method="LF")
        return realization, modal

    k_tol, k_gap = _rank_counts(pencil, config.svd_tolerance)
    if abs(k_tol - k_gap) <= 2:
        # clean rank boundary: the single realization at the numerical rank
        # is exact, and higher orders would only make the pencil singular
        realization = realize(pencil, k_tol)
        modal, _ = realization_to_modal(realization, band, source_method="LF")
        return realization, modal

    warnings.warn(
        f"ambiguous numerical rank (threshold {k_tol} vs gap {k_gap}): "
        "consolidating realizations over an order sweep",
        RuntimeWarning,
        stacklevel=2,
    )
    from .tracking import build_diagram, consolidate_modes

    sweep = tuple(orders) if orders is not None else DEFAULT_ORDER_SWEEP
    k_max = min(pencil.L.shape)
    sweep = tuple(k for k in sweep if 1 <= k <= k_max)
    if not sweep:
        raise ValueError("order sweep is empty after clipping to the pencil size")
    svd_cache = _shifted_svd(pencil, max(sweep))

    def identify(_frf, order: int) -> ModalParameterSet:
        rk = realize(pencil, order, _svd=svd_cache)
        modal_k, _ = realization_to_modal(rk, band, source_method="LF")
        return modal_k

    diagram = build_diagram(identify, sweep, frf, method="LF")
    try:
        modal = consolidate_modes(diagram, source_method="LF")
    except ValueError:
        # sweep too broken to form chains: fall back to the gap-rank realization
        k_fb = min(max(k_gap, sweep[0]), sweep[-1])
        realization = realize(pencil, k_fb, _svd=svd_cache)
        modal, _ = realization_to_modal(realization, band, source_method="LF")
        return realization, modal

    k_ret = min(max(k_gap, sweep[0]), sweep[-1])
    realization = realize(pencil, k_ret, _svd=svd_cache)
    return realization, modal
