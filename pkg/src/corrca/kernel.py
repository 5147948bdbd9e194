"""Kernel CorrCA.

The nonlinear map is applied per sample (the time axis is kept), and the
projection is expanded on the mapped training samples. For the *mean* model
the expansion uses the across-repetition mean of the mapped samples, so the
features of a sample ``z`` are ``kbar[i] = mean_k K(x_i^k, z)`` (length T);
the *full* model uses every training sample, ``K(x_i^k, z)`` for all ``(k, i)``
(length N*T). Linear CorrCA on those feature tensors gives ``alpha``.

Out-of-sample data are evaluated against the stored training samples with no
further centering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .covariance import covariance_pair
from .data import ComponentTensor, DataTensor, as_array
from .eigensolve import Regularization, solve
from .errors import DimensionError, ValidationError
from .linear import isc_of_components

__all__ = ["KernelSpec", "KernelCorrCAModel", "gram", "median_bandwidth", "fit_kernel", "transform_kernel"]

DEFAULT_SHRINKAGE = 1e-6


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice.

    gaussian: ``exp(-|a - b|^2 / (2 bandwidth^2))``; ``bandwidth=None`` means the
    median heuristic at fit time. tanh: ``tanh(scale * <a, b> + offset)``.
    """

    kind: str = "gaussian"
    bandwidth: float | None = None
    scale: float = 1.0
    offset: float = 0.0
    model_variant: str = "mean"

    def __post_init__(self):
        if self.kind not in ("gaussian", "tanh"):
            raise ValidationError(f"unknown kernel {self.kind!r}")
        if self.model_variant not in ("mean", "full"):
            raise ValidationError(f"model_variant must be 'mean' or 'full', got {self.model_variant!r}")
        if self.bandwidth is not None and not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValidationError(f"bandwidth must be finite and positive, got {self.bandwidth}")
        if not (np.isfinite(self.scale) and np.isfinite(self.offset)):
            raise ValidationError("tanh scale/offset must be finite")


@dataclass(frozen=True)
class KernelCorrCAModel:
    alpha: np.ndarray
    kernel: KernelSpec
    training_reference: np.ndarray  # (T, D, N) training tensor
    isc: np.ndarray
    eigenvalues: np.ndarray
    regularization: Regularization

    @property
    def j_components(self) -> int:
        return self.alpha.shape[1]


def gram(x_k, x_l, spec: KernelSpec) -> np.ndarray:
    """Kernel matrix between the rows (samples) of two ``(T, D)`` arrays."""
    a = np.atleast_2d(np.asarray(x_k, dtype=np.float64))
    b = np.atleast_2d(np.asarray(x_l, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    if spec.kind == "gaussian":
        if spec.bandwidth is None:
            raise ValidationError("gaussian kernel needs a resolved bandwidth")
        sq = cdist(a, b, "sqeuclidean")
        return np.exp(-sq / (2.0 * spec.bandwidth ** 2))
    return np.tanh(spec.scale * (a @ b.T) + spec.offset)


def median_bandwidth(x) -> float:
    """Median pairwise distance between samples of the across-repetition mean."""
    mean = as_array(x).mean(axis=2)
    dist = pdist(mean)
    med = float(np.median(dist)) if dist.size else 0.0
    return med if med > 0 else 1.0


def _features(samples: np.ndarray, ref: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Kernel features of ``samples`` (S, D) against the training tensor ``ref``."""
    n = ref.shape[2]
    grams = [gram(ref[:, :, k], samples, spec) for k in range(n)]  # each (T, S)
    if spec.model_variant == "mean":
        return np.mean(grams, axis=0).T  # (S, T)
    return np.concatenate(grams, axis=0).T  # (S, N*T)


def _feature_tensor(arr: np.ndarray, ref: np.ndarray, spec: KernelSpec) -> np.ndarray:
    return np.stack([_features(arr[:, :, l], ref, spec) for l in range(arr.shape[2])], axis=2)


def fit_kernel(
    x,
    spec: KernelSpec | None = None,
    reg: "Regularization | str | None" = None,
    n_components: int | None = None,
) -> KernelCorrCAModel:
    """Fit kernel CorrCA. Cost grows as T^3 (mean) or (N T)^3 (full).

    ``reg`` defaults to shrinkage with gamma = 1e-6 on ``C_W``: kernel feature
    covariances are nearly always close to singular.
    """
    spec = spec or KernelSpec()
    ref = np.array(as_array(x), dtype=np.float64)
    if spec.kind == "gaussian" and spec.bandwidth is None:
        spec = KernelSpec(
            kind=spec.kind,
            bandwidth=median_bandwidth(ref),
            scale=spec.scale,
            offset=spec.offset,
            model_variant=spec.model_variant,
        )
    reg = Regularization("shrinkage", DEFAULT_SHRINKAGE) if reg is None else Regularization.parse(reg)
    feats = _feature_tensor(ref, ref, spec)
    pair = covariance_pair(feats)
    dec = solve(pair.r_b, pair.r_w, reg)
    j = dec.vectors.shape[1] if n_components is None else int(n_components)
    alpha = dec.vectors[:, :j]
    lam = dec.eigenvalues[:j]
    y = np.einsum("itl,tj->ijl", feats, alpha)
    return KernelCorrCAModel(
        alpha=alpha,
        kernel=spec,
        training_reference=ref,
        isc=isc_of_components(y),
        eigenvalues=lam,
        regularization=reg,
    )


def transform_kernel(x_new, model: KernelCorrCAModel) -> ComponentTensor:
    """``y^l = alpha^T kbar^l`` evaluated for every sample of ``x_new``."""
    arr = as_array(x_new)
    ref = model.training_reference
    if arr.shape[1] != ref.shape[1]:
        raise DimensionError(f"data has D={arr.shape[1]} features, model expects {ref.shape[1]}")
    feats = _feature_tensor(arr, ref, model.kernel)
    ids = x_new.repetition_ids if isinstance(x_new, DataTensor) else None
    return ComponentTensor(np.einsum("itl,tj->ijl", feats, model.alpha), repetition_ids=ids)
