"""Multi-set CCA: one projection per repetition, maximizing ISC.

The stacked vector ``v = [v^1; ...; v^N]`` solves ``R v = lam D v`` with ``R``
the full block matrix of cross-covariances ``R^{lk}`` and ``D`` its block
diagonal; ``rho = (lam - 1) / (N - 1)``.

Only repetitions seen in training can be transformed: there is no projection
for an unseen subject.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .covariance import cross_covariance_blocks
from .data import ComponentTensor, DataTensor, as_array, center_per_repetition
from .eigensolve import (
    Regularization,
    _definiteness_floor,
    generalized_eig,
    shrink_matrix,
)
from .errors import DefinitenessError, DimensionError
from .linear import UNDEFINED_TOL, UndefinedIscWarning, forward_model

__all__ = ["MCCAModel", "fit_mcca", "transform_mcca"]


@dataclass(frozen=True)
class MCCAModel:
    backward_per_rep: tuple[np.ndarray, ...]
    eigenvalues: np.ndarray
    isc: np.ndarray
    regularization: Regularization
    training_dims: tuple[int, int, int]
    degenerate: np.ndarray

    @property
    def j_components(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        return np.vstack(self.backward_per_rep)

    def forward_per_rep(self, x) -> list[np.ndarray]:
        """``R^{ll} V^l (V^l^T R^{ll} V^l)^-1`` for each repetition of ``x``."""
        arr = center_per_repetition(as_array(x))
        out = []
        for l, v in enumerate(self.backward_per_rep):
            xl = arr[:, :, l]
            out.append(forward_model(v, xl.T @ xl))
        return out


def _block_basis(blocks, reg: Regularization):
    """Per-block retained eigenbasis and eigenvalues for TSVD."""
    n = blocks.n_reps
    k = reg.value
    bases, values = [], []
    for l in range(n):
        r_ll = blocks.block(l, l)
        w, u = linalg.eigh(0.5 * (r_ll + r_ll.T))
        w, u = w[::-1], u[:, ::-1]
        rank = int(np.sum(w > _definiteness_floor(r_ll))) if np.trace(r_ll) > 0 else 0
        if rank < k:
            raise DefinitenessError(
                f"repetition {l}: covariance rank {rank} below tsvd K={k}"
            )
        bases.append(u[:, :k])
        values.append(w[:k])
    q = linalg.block_diag(*bases)
    return q, np.concatenate(values)


def fit_mcca(x, reg: "Regularization | str | None" = None, n_components: int | None = None) -> MCCAModel:
    """Fit MCCA; keep ``n_components`` (default ``D``, or ``K`` under TSVD).

    Up to ``N*D`` (``N*K``) components may be requested. TSVD is applied block
    by block; shrinkage shrinks each diagonal block toward its own mean
    eigenvalue, and components are then reported with, and ordered by, their
    actual training ISC.
    """
    reg = Regularization.parse(reg)
    arr = center_per_repetition(as_array(x))
    t, d, n = arr.shape
    blocks = cross_covariance_blocks(arr)
    r_full = blocks.r_full

    if reg.kind == "tsvd":
        if reg.value > d:
            raise DimensionError(f"tsvd K={reg.value} exceeds D={d}")
        q, w = _block_basis(blocks, reg)
        dec = generalized_eig(q.T @ r_full @ q, np.diag(w))
        vectors = q @ dec.vectors
        per_block = reg.value
    else:
        d_block = blocks.d_block.copy()
        for l in range(n):
            sl = slice(l * d, (l + 1) * d)
            r_ll = d_block[sl, sl]
            if reg.kind == "shrinkage":
                d_block[sl, sl] = shrink_matrix(r_ll, reg.value)
            else:
                w_min = linalg.eigvalsh(r_ll)[0]
                floor = _definiteness_floor(r_ll)
                if floor <= 0 or w_min <= floor:
                    raise DefinitenessError(
                        f"repetition {l}: covariance is not positive definite; regularize with tsvd:K or shrinkage:gamma"
                    )
        dec = generalized_eig(r_full, d_block)
        vectors = dec.vectors
        per_block = d

    lam = dec.eigenvalues
    degenerate = dec.degenerate
    if reg.kind == "shrinkage":
        # eigenvalues are ratios against the shrunk blocks; report the actual training ISC
        den = np.einsum("ij,ik,kj->j", vectors, blocks.d_block, vectors)
        num = np.einsum("ij,ik,kj->j", vectors, r_full, vectors)
        floor = UNDEFINED_TOL * max(np.trace(blocks.d_block), 0.0) / (n * d) * np.einsum("ij,ij->j", vectors, vectors)
        keep = den > floor
        if not keep.all():
            warnings.warn(
                f"dropped {int((~keep).sum())} component(s) with undefined ISC (zero within-repetition variance)",
                UndefinedIscWarning,
                stacklevel=2,
            )
        vectors, lam, degenerate = vectors[:, keep], lam[keep], degenerate[keep]
        rho = (num[keep] / den[keep] - 1.0) / (n - 1)
        order = np.argsort(-rho, kind="stable")
        vectors, lam, degenerate, rho = vectors[:, order], lam[order], degenerate[order], rho[order]
    else:
        rho = (lam - 1.0) / (n - 1)
    j = min(per_block, lam.shape[0]) if n_components is None else int(n_components)
    if not 1 <= j <= lam.shape[0]:
        raise DimensionError(f"n_components={j} outside [1, {lam.shape[0]}]")
    vectors, lam, rho, degenerate = vectors[:, :j], lam[:j], rho[:j], degenerate[:j]

    # one sign per stacked vector: peak of the summed per-repetition patterns positive
    pattern = sum(
        blocks.d_block[l * d:(l + 1) * d, l * d:(l + 1) * d] @ vectors[l * d:(l + 1) * d]
        for l in range(n)
    )
    peak = np.argmax(np.abs(pattern), axis=0)
    signs = np.sign(pattern[peak, np.arange(j)])
    signs[signs == 0] = 1.0
    vectors = vectors * signs

    per_rep = tuple(vectors[l * d:(l + 1) * d].copy() for l in range(n))
    return MCCAModel(
        backward_per_rep=per_rep,
        eigenvalues=lam,
        isc=rho,
        regularization=reg,
        training_dims=(t, d, n),
        degenerate=degenerate,
    )


def transform_mcca(x, model: MCCAModel) -> ComponentTensor:
    """``y[:, :, l] = x[:, :, l] @ V^l``; repetitions must match training."""
    arr = as_array(x)
    _, d, n = model.training_dims
    if arr.shape[1] != d or arr.shape[2] != n:
        raise DimensionError(
            f"data (D={arr.shape[1]}, N={arr.shape[2]}) does not match model (D={d}, N={n})"
        )
    y = np.stack([arr[:, :, l] @ model.backward_per_rep[l] for l in range(n)], axis=2)
    ids = x.repetition_ids if isinstance(x, DataTensor) else None
    return ComponentTensor(y, repetition_ids=ids)
