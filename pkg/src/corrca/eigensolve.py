"""Symmetric-definite generalized eigenproblem ``A V = B V diag(lam)``.

``B`` is reduced with its Cholesky factor ``B = L L^T`` so the problem becomes
the ordinary symmetric eigenproblem of ``L^-1 A L^-T``. Truncated (TSVD) and
shrinkage regularization of ``B`` are provided for rank-deficient data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DefinitenessError, DimensionError, ValidationError

__all__ = [
    "Regularization",
    "GeneralizedEigenDecomposition",
    "generalized_eig",
    "generalized_eig_tsvd",
    "shrink_matrix",
    "solve",
    "numerical_rank",
]

DEGENERATE_GAP = 1e-10
DEFINITENESS_TOL = 1e-12


@dataclass(frozen=True)
class Regularization:
    """``none``, ``tsvd:K`` or ``shrinkage:gamma``."""

    kind: str = "none"
    value: float | int | None = None

    def __post_init__(self):
        if self.kind not in ("none", "tsvd", "shrinkage"):
            raise ValidationError(f"unknown regularization kind {self.kind!r}")
        if self.kind == "tsvd":
            if self.value is None or int(self.value) != self.value or int(self.value) < 1:
                raise ValidationError(f"tsvd needs a positive integer K, got {self.value!r}")
            object.__setattr__(self, "value", int(self.value))
        elif self.kind == "shrinkage":
            if self.value is None or not 0.0 <= float(self.value) <= 1.0:
                raise ValidationError(f"shrinkage gamma must lie in [0, 1], got {self.value!r}")
            object.__setattr__(self, "value", float(self.value))
        elif self.value is not None:
            raise ValidationError("regularization 'none' takes no value")

    @classmethod
    def parse(cls, text: "str | Regularization | None") -> "Regularization":
        if text is None:
            return cls()
        if isinstance(text, Regularization):
            return text
        text = text.strip().lower()
        if text in ("", "none"):
            return cls()
        kind, sep, raw = text.partition(":")
        if not sep:
            raise ValidationError(f"cannot parse regularization {text!r}; use none, tsvd:K or shrinkage:gamma")
        try:
            value = int(raw) if kind == "tsvd" else float(raw)
        except ValueError:
            raise ValidationError(f"bad regularization value in {text!r}") from None
        return cls(kind, value)

    def __str__(self) -> str:
        if self.kind == "none":
            return "none"
        return f"{self.kind}:{self.value!r}"


@dataclass(frozen=True)
class GeneralizedEigenDecomposition:
    """Eigenvectors (columns, ``v^T B v = 1``) with descending eigenvalues."""

    vectors: np.ndarray
    eigenvalues: np.ndarray
    rank_used: int
    regularization: Regularization
    degenerate: np.ndarray


def _check_square_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"A must be square, got {a.shape}")
    if b.shape != a.shape:
        raise DimensionError(f"A {a.shape} and B {b.shape} differ in shape")
    return 0.5 * (a + a.T), 0.5 * (b + b.T)


def _definiteness_floor(b: np.ndarray) -> float:
    return DEFINITENESS_TOL * max(np.trace(b), 0.0) / b.shape[0]


def numerical_rank(b: np.ndarray) -> int:
    """Number of eigenvalues of symmetric ``b`` above ``1e-12 * trace / D``."""
    w = linalg.eigvalsh(0.5 * (b + b.T))
    floor = _definiteness_floor(b)
    if floor <= 0:
        return 0
    return int(np.sum(w > floor))


def _degenerate_flags(lam: np.ndarray) -> np.ndarray:
    flags = np.zeros(lam.shape, dtype=bool)
    if lam.size < 2:
        return flags
    scale = max(np.max(np.abs(lam)), np.finfo(float).tiny)
    close = np.abs(np.diff(lam)) < DEGENERATE_GAP * scale
    flags[:-1] |= close
    flags[1:] |= close
    return flags


def _orient_and_order(vectors, lam, b):
    """Fix signs and order columns deterministically.

    Each column is flipped so the largest-magnitude entry of its forward
    pattern ``b v`` is positive. Columns are sorted by eigenvalue descending;
    exactly equal eigenvalues are ordered lexicographically by their
    coordinates, descending.
    """
    fwd = b @ vectors
    if fwd.size:
        peak = np.argmax(np.abs(fwd), axis=0)
        signs = np.sign(fwd[peak, np.arange(fwd.shape[1])])
        signs[signs == 0] = 1.0
        vectors = vectors * signs
    # lexsort: last key is primary
    keys = [-vectors[r] for r in range(vectors.shape[0] - 1, -1, -1)] + [-lam]
    order = np.lexsort(keys)
    return vectors[:, order], lam[order]


def generalized_eig(a, b) -> GeneralizedEigenDecomposition:
    """Solve ``a v = lam b v`` for symmetric ``a`` and positive definite ``b``.

    Raises
    ------
    DefinitenessError
        If the smallest eigenvalue of ``b`` is below ``1e-12 * trace(b) / D``.
    """
    a, b = _check_square_pair(a, b)
    w_b = linalg.eigvalsh(b)
    floor = _definiteness_floor(b)
    if floor <= 0 or w_b[0] <= floor:
        raise DefinitenessError(
            f"B is not positive definite (min eigenvalue {w_b[0]:.3g}); "
            "regularize with tsvd:K or shrinkage:gamma"
        )
    try:
        chol = linalg.cholesky(b, lower=True)
    except linalg.LinAlgError:
        raise DefinitenessError("Cholesky factorization of B failed; regularize with tsvd:K or shrinkage:gamma") from None
    tmp = linalg.solve_triangular(chol, a, lower=True)
    m = linalg.solve_triangular(chol, tmp.T, lower=True).T
    m = 0.5 * (m + m.T)
    lam, u = linalg.eigh(m)
    vectors = linalg.solve_triangular(chol.T, u, lower=False)
    vectors, lam = _orient_and_order(vectors, lam, b)
    return GeneralizedEigenDecomposition(
        vectors=vectors,
        eigenvalues=lam,
        rank_used=a.shape[0],
        regularization=Regularization(),
        degenerate=_degenerate_flags(lam),
    )


def generalized_eig_tsvd(a, b, k: int) -> GeneralizedEigenDecomposition:
    """Generalized eigenvectors with ``b`` truncated to its top-``k`` eigenpairs.

    The problem is solved inside the retained ``k``-dimensional eigenspace of
    ``b`` and mapped back, so every returned vector is orthogonal to the
    discarded eigenvectors. If ``k`` exceeds the numerical rank of ``b`` it is
    reduced to that rank with a warning.
    """
    a, b = _check_square_pair(a, b)
    dim = a.shape[0]
    k = int(k)
    if not 1 <= k <= dim:
        raise ValidationError(f"tsvd K must lie in [1, {dim}], got {k}")
    w_b, u_b = linalg.eigh(b)
    w_b, u_b = w_b[::-1], u_b[:, ::-1]
    rank = int(np.sum(w_b > _definiteness_floor(b))) if np.trace(b) > 0 else 0
    if rank == 0:
        raise DefinitenessError("B is numerically zero; nothing to retain")
    if k > rank:
        warnings.warn(f"tsvd K={k} exceeds numerical rank {rank} of B; using K={rank}", RuntimeWarning, stacklevel=2)
        k = rank
    basis = u_b[:, :k]
    a_k = basis.T @ a @ basis
    b_k = np.diag(w_b[:k])
    inner = generalized_eig(a_k, b_k)
    vectors = basis @ inner.vectors
    vectors, lam = _orient_and_order(vectors, inner.eigenvalues, b)
    return GeneralizedEigenDecomposition(
        vectors=vectors,
        eigenvalues=lam,
        rank_used=k,
        regularization=Regularization("tsvd", k),
        degenerate=_degenerate_flags(lam),
    )


def shrink_matrix(b, gamma: float) -> np.ndarray:
    """``(1 - gamma) b + gamma * mean_eigenvalue(b) * I``."""
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma}")
    b = np.asarray(b, dtype=np.float64)
    lam_bar = np.trace(b) / b.shape[0]
    return (1.0 - gamma) * b + gamma * lam_bar * np.eye(b.shape[0])


def solve(a, b, reg: "Regularization | str | None" = None) -> GeneralizedEigenDecomposition:
    """Dispatch on a regularization descriptor."""
    reg = Regularization.parse(reg)
    if reg.kind == "tsvd":
        return generalized_eig_tsvd(a, b, reg.value)
    if reg.kind == "shrinkage":
        dec = generalized_eig(a, shrink_matrix(b, reg.value))
        return GeneralizedEigenDecomposition(
            vectors=dec.vectors,
            eigenvalues=dec.eigenvalues,
            rank_used=dec.rank_used,
            regularization=reg,
            degenerate=dec.degenerate,
        )
    return generalized_eig(a, b)
