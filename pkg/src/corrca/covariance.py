"""Within/between/total covariance, LDA scatter matrices and MCCA blocks.

All matrices are unnormalized sums over samples and repetitions, with no
``1/((T-1) N)`` factor. ISC is a ratio of these sums so the factor cancels,
but the absolute values differ from ``np.cov`` by design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import as_array

__all__ = [
    "CovariancePair",
    "ScatterSet",
    "CrossCovarianceBlocks",
    "within_covariance",
    "between_covariance_direct",
    "total_covariance_fast",
    "covariance_pair",
    "scatter_set",
    "cross_covariance_blocks",
]


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _chunks(t: int, chunk_size: int | None):
    step = t if not chunk_size else int(chunk_size)
    for start in range(0, t, step):
        yield slice(start, min(start + step, t))


@dataclass(frozen=True)
class CovariancePair:
    """``r_w``, ``r_b`` and ``r_t = r_b + r_w`` for one tensor."""

    r_w: np.ndarray
    r_b: np.ndarray
    r_t: np.ndarray
    t_samples: int
    n_reps: int


@dataclass(frozen=True)
class ScatterSet:
    """LDA scatter matrices with samples as classes and repetitions as exemplars."""

    s_t: np.ndarray
    s_b: np.ndarray
    s_w: np.ndarray
    s_m: np.ndarray


@dataclass(frozen=True)
class CrossCovarianceBlocks:
    """Full ``(ND, ND)`` block matrix of ``R^{lk}`` and its block diagonal."""

    r_full: np.ndarray
    d_block: np.ndarray
    n_reps: int
    d_features: int

    def block(self, l: int, k: int) -> np.ndarray:
        d = self.d_features
        return self.r_full[l * d:(l + 1) * d, k * d:(k + 1) * d]


def within_covariance(x, chunk_size: int | None = None) -> np.ndarray:
    """Sum over repetitions of squared deviations from each repetition's mean."""
    arr = as_array(x)
    dev = arr - arr.mean(axis=0, keepdims=True)
    d = arr.shape[1]
    out = np.zeros((d, d))
    for sl in _chunks(arr.shape[0], chunk_size):
        blk = dev[sl]
        out += np.einsum("idl,iel->de", blk, blk)
    return _sym(out)


def between_covariance_direct(x) -> np.ndarray:
    """Pairwise sum over ordered repetition pairs ``l != k``.

    O(N^2) reference implementation; :func:`covariance_pair` computes the same
    matrix without a pairwise loop.
    """
    arr = as_array(x)
    dev = arr - arr.mean(axis=0, keepdims=True)
    n = arr.shape[2]
    d = arr.shape[1]
    out = np.zeros((d, d))
    for l in range(n):
        for k in range(n):
            if k != l:
                out += dev[:, :, l].T @ dev[:, :, k]
    return _sym(out)


def total_covariance_fast(x, chunk_size: int | None = None) -> np.ndarray:
    """``N^2`` times the scatter of the across-repetition mean series."""
    arr = as_array(x)
    n = arr.shape[2]
    mean_series = arr.mean(axis=2)
    dev = mean_series - mean_series.mean(axis=0, keepdims=True)
    d = arr.shape[1]
    out = np.zeros((d, d))
    for sl in _chunks(arr.shape[0], chunk_size):
        out += dev[sl].T @ dev[sl]
    return _sym(n * n * out)


def covariance_pair(x) -> CovariancePair:
    arr = as_array(x)
    r_w = within_covariance(arr)
    r_t = total_covariance_fast(arr)
    return CovariancePair(r_w=r_w, r_b=r_t - r_w, r_t=r_t, t_samples=arr.shape[0], n_reps=arr.shape[2])


def scatter_set(x) -> ScatterSet:
    arr = as_array(x)
    grand = arr.mean(axis=(0, 2))
    class_means = arr.mean(axis=2)
    rep_means = arr.mean(axis=0)  # (D, N)
    n = arr.shape[2]

    dev_t = arr - grand[None, :, None]
    s_t = np.einsum("idl,iel->de", dev_t, dev_t)
    dev_b = class_means - grand
    s_b = n * dev_b.T @ dev_b
    dev_w = arr - class_means[:, :, None]
    s_w = np.einsum("idl,iel->de", dev_w, dev_w)
    dev_m = rep_means - grand[:, None]
    s_m = dev_m @ dev_m.T
    return ScatterSet(s_t=_sym(s_t), s_b=_sym(s_b), s_w=_sym(s_w), s_m=_sym(s_m))


def cross_covariance_blocks(x) -> CrossCovarianceBlocks:
    arr = as_array(x)
    t, d, n = arr.shape
    dev = arr - arr.mean(axis=0, keepdims=True)
    stacked = dev.transpose(0, 2, 1).reshape(t, n * d)  # column l*d + j = feature j of rep l
    r_full = _sym(stacked.T @ stacked)
    d_block = np.zeros_like(r_full)
    for l in range(n):
        sl = slice(l * d, (l + 1) * d)
        d_block[sl, sl] = r_full[sl, sl]
    return CrossCovarianceBlocks(r_full=r_full, d_block=d_block, n_reps=n, d_features=d)
