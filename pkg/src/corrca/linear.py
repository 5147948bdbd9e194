"""Linear correlated components analysis.

``fit`` finds projections ``V`` solving ``R_B V = R_W V diag(lam)``; the ISC of
component ``d`` is ``lam_d / (N - 1)``. Also here: the forward model, ISC of
arbitrary component signals, the ISC <-> SNR <-> F relations, the equivalent
LDA formulation and a PCA-of-the-mean baseline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .covariance import covariance_pair, scatter_set
from .data import ComponentTensor, DataTensor, as_array, center_per_repetition
from .eigensolve import Regularization, generalized_eig, solve
from .errors import DimensionError, RankError, ValidationError

__all__ = [
    "CorrCAModel",
    "IscStatistics",
    "fit",
    "transform",
    "forward_model",
    "isc_of_components",
    "isc_per_subject",
    "isc_to_snr",
    "snr_to_isc",
    "f_statistic",
    "isc_statistics",
    "fit_lda_view",
    "fit_pca_mean_baseline",
]

# relative floor under which a component's within-repetition variance counts as zero
UNDEFINED_TOL = 1e-12


class UndefinedIscWarning(UserWarning):
    """Components with zero within-repetition variance were dropped."""


@dataclass(frozen=True)
class CorrCAModel:
    """Fitted projections.

    ``backward`` maps features to components (``y = V^T x``), ``forward`` maps
    components back to features. ``isc`` is ordered descending for CorrCA
    fits; the PCA baseline keeps variance order instead.
    """

    backward: np.ndarray
    forward: np.ndarray
    isc: np.ndarray
    eigenvalues: np.ndarray
    regularization: Regularization
    training_dims: tuple[int, int, int]
    degenerate: np.ndarray
    method: str = "corrca"
    labels: tuple[str, ...] | None = field(default=None)

    @property
    def j_components(self) -> int:
        return self.backward.shape[1]

    def statistics(self, t: int | None = None) -> "IscStatistics":
        t0, _, n = self.training_dims
        return isc_statistics(self.isc, t0 if t is None else t, n)

    def truncate(self, j: int) -> "CorrCAModel":
        if not 1 <= j <= self.j_components:
            raise DimensionError(f"cannot keep {j} of {self.j_components} components")
        return CorrCAModel(
            backward=self.backward[:, :j],
            forward=self.forward[:, :j],
            isc=self.isc[:j],
            eigenvalues=self.eigenvalues[:j],
            regularization=self.regularization,
            training_dims=self.training_dims,
            degenerate=self.degenerate[:j],
            method=self.method,
            labels=self.labels,
        )


@dataclass(frozen=True)
class IscStatistics:
    """Per-component ISC with the matching SNR and F value.

    ``saturated`` marks components with ISC >= 1, whose SNR and F are +inf.
    """

    isc: np.ndarray
    snr: np.ndarray
    f_value: np.ndarray
    dof: tuple[int, int]
    saturated: np.ndarray


def _sign_fix(backward, forward):
    if forward.size == 0:
        return backward, forward
    peak = np.argmax(np.abs(forward), axis=0)
    signs = np.sign(forward[peak, np.arange(forward.shape[1])])
    signs[signs == 0] = 1.0
    return backward * signs, forward * signs


def forward_model(v, r_w) -> np.ndarray:
    """Least-squares forward model ``A = R_W V (V^T R_W V)^-1``."""
    v = np.asarray(v, dtype=np.float64)
    r_w = np.asarray(r_w, dtype=np.float64)
    if v.ndim != 2 or r_w.shape != (v.shape[0], v.shape[0]):
        raise DimensionError(f"V {v.shape} incompatible with R_W {r_w.shape}")
    rv = r_w @ v
    inner = v.T @ rv
    inner = 0.5 * (inner + inner.T)
    s = linalg.svdvals(inner)
    if s.size == 0 or s[-1] <= 1e-12 * max(s[0], np.finfo(float).tiny):
        raise RankError("V^T R_W V is singular; forward model undefined")
    return linalg.solve(inner, rv.T, assume_a="sym").T


def _component_terms(y: np.ndarray):
    """Scalar r_W and r_B per component, via the fast total-covariance identity."""
    n = y.shape[2]
    dev = y - y.mean(axis=0, keepdims=True)
    r_w = np.einsum("ijl,ijl->j", dev, dev)
    mean = dev.mean(axis=2)
    r_t = n * n * np.einsum("ij,ij->j", mean, mean)
    return r_w, r_t - r_w, dev


def isc_of_components(y) -> np.ndarray:
    """ISC of each component: ``r_B / ((N - 1) r_W)``.

    Components with zero within-repetition variance get NaN (undefined)
    rather than an infinite value.
    """
    y = as_array(y)
    n = y.shape[2]
    r_w, r_b, _ = _component_terms(y)
    scale = np.einsum("ijl,ijl->j", y, y)
    undefined = r_w <= UNDEFINED_TOL * scale
    undefined |= r_w == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = r_b / ((n - 1) * r_w)
    rho[undefined] = np.nan
    return rho


def _pairwise_terms(y: np.ndarray):
    dev = y - y.mean(axis=0, keepdims=True)
    # r[j, k, l] = sum_i dev[i, j, k] dev[i, j, l]
    return np.einsum("ijk,ijl->jkl", dev, dev)


def isc_per_subject(y, subject: int | None = None) -> np.ndarray:
    """ISC of one repetition against all others, per component.

    Returns shape ``(J,)`` for a given ``subject`` or ``(J, N)`` for all.
    """
    y = as_array(y)
    n = y.shape[2]
    r = _pairwise_terms(y)
    diag = np.einsum("jkk->jk", r)
    num = 2.0 * (r.sum(axis=2) - diag)
    den = (n - 1) * diag + (diag.sum(axis=1, keepdims=True) - diag)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    if subject is None:
        return rho
    if not 0 <= subject < n:
        raise DimensionError(f"subject index {subject} out of range for N={n}")
    return rho[:, subject]


def isc_to_snr(rho, n: int):
    """Class separation ``(rho + 1/(N-1)) / (1 - rho)``; +inf for rho >= 1."""
    rho = np.asarray(rho, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (rho + 1.0 / (n - 1)) / (1.0 - rho)
    s = np.where(rho >= 1.0, np.inf, s)
    return s[()] if s.ndim == 0 else s


def snr_to_isc(s, n: int):
    """Inverse of :func:`isc_to_snr`."""
    s = np.asarray(s, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        rho = np.where(np.isinf(s), 1.0, (s - 1.0 / (n - 1)) / (1.0 + s))
    return rho[()] if rho.ndim == 0 else rho


def f_statistic(rho, t: int, n: int):
    """``F = (T (N-1) rho + T) / ((T-1)(1-rho))`` with ``d1 = T(N-1)``, ``d2 = T-1``."""
    rho = np.asarray(rho, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (t * (n - 1) * rho + t) / ((t - 1) * (1.0 - rho))
    f = np.where(rho >= 1.0, np.inf, f)
    return (f[()] if f.ndim == 0 else f), t * (n - 1), t - 1


def isc_statistics(rho, t: int, n: int) -> IscStatistics:
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    f, d1, d2 = f_statistic(rho, t, n)
    return IscStatistics(
        isc=rho,
        snr=np.atleast_1d(isc_to_snr(rho, n)),
        f_value=np.atleast_1d(f),
        dof=(d1, d2),
        saturated=rho >= 1.0,
    )


def _rayleigh_isc(v, r_b, r_w, n):
    num = np.einsum("dj,de,ej->j", v, r_b, v)
    den = np.einsum("dj,de,ej->j", v, r_w, v)
    floor = UNDEFINED_TOL * max(np.trace(r_w), 0.0) / r_w.shape[0] * np.einsum("dj,dj->j", v, v)
    undefined = den <= floor
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = num / ((n - 1) * den)
    rho[undefined] = np.nan
    return rho


def fit(x, reg: "Regularization | str | None" = None, n_components: int | None = None) -> CorrCAModel:
    """Fit CorrCA to a ``(T, D, N)`` tensor.

    Data are centered per repetition first. With ``reg='none'`` the
    within-repetition covariance must be positive definite; otherwise a
    :class:`~corrca.errors.DefinitenessError` suggests ``tsvd:K`` or
    ``shrinkage:gamma``.

    Components whose within-repetition variance vanishes (their ISC is
    undefined) are dropped with a warning. Under shrinkage the eigenvalues
    are ratios against the shrunk covariance, so components are reported
    with, and ordered by, their actual training ISC.
    """
    reg = Regularization.parse(reg)
    arr = center_per_repetition(as_array(x))
    t, d, n = arr.shape
    pair = covariance_pair(arr)
    dec = solve(pair.r_b, pair.r_w, reg)
    v = dec.vectors
    lam = dec.eigenvalues
    degenerate = dec.degenerate
    rho = _rayleigh_isc(v, pair.r_b, pair.r_w, n)

    keep = ~np.isnan(rho)
    if not keep.all():
        warnings.warn(
            f"dropped {int((~keep).sum())} component(s) with undefined ISC (zero within-repetition variance)",
            UndefinedIscWarning,
            stacklevel=2,
        )
        v, lam, rho, degenerate = v[:, keep], lam[keep], rho[keep], degenerate[keep]
    if reg.kind == "shrinkage":
        order = np.argsort(-rho, kind="stable")
        v, lam, rho, degenerate = v[:, order], lam[order], rho[order], degenerate[order]
    else:
        rho = lam / (n - 1)
    if n_components is not None:
        if not 1 <= n_components <= v.shape[1]:
            raise DimensionError(f"n_components={n_components} outside [1, {v.shape[1]}]")
        v, lam, rho, degenerate = v[:, :n_components], lam[:n_components], rho[:n_components], degenerate[:n_components]

    a = forward_model(v, pair.r_w)
    v, a = _sign_fix(v, a)
    labels = x.labels if isinstance(x, DataTensor) else None
    return CorrCAModel(
        backward=v,
        forward=a,
        isc=rho,
        eigenvalues=lam,
        regularization=reg,
        training_dims=(t, d, n),
        degenerate=degenerate,
        labels=labels,
    )


def transform(x, model: CorrCAModel) -> ComponentTensor:
    """Project ``y[i, j, l] = sum_d V[d, j] x[i, d, l]``; no centering."""
    arr = as_array(x)
    v = model.backward if isinstance(model, CorrCAModel) else np.asarray(model, dtype=np.float64)
    if arr.shape[1] != v.shape[0]:
        raise DimensionError(f"data has D={arr.shape[1]} features, model expects {v.shape[0]}")
    ids = x.repetition_ids if isinstance(x, DataTensor) else None
    return ComponentTensor(np.einsum("idl,dj->ijl", arr, v), repetition_ids=ids)


def fit_lda_view(x, mean_tol: float = 1e-10) -> CorrCAModel:
    """CorrCA through the LDA scatter matrices (samples = classes).

    Requires equal per-repetition means (center the data first). Solves
    ``S_B V = S_W V diag(S)`` and maps separations back to ISC.
    """
    arr = as_array(x)
    t, d, n = arr.shape
    sc = scatter_set(arr)
    if np.linalg.norm(sc.s_m) > mean_tol * np.linalg.norm(sc.s_t):
        raise ValidationError(
            "per-repetition means differ (S_M not negligible); center each repetition before the LDA view"
        )
    dec = generalized_eig(sc.s_b, sc.s_w)
    rho = snr_to_isc(dec.eigenvalues, n)
    r_w = covariance_pair(arr).r_w
    a = forward_model(dec.vectors, r_w)
    v, a = _sign_fix(dec.vectors, a)
    return CorrCAModel(
        backward=v,
        forward=a,
        isc=np.asarray(rho),
        eigenvalues=dec.eigenvalues,
        regularization=Regularization(),
        training_dims=(t, d, n),
        degenerate=dec.degenerate,
        method="lda",
        labels=x.labels if isinstance(x, DataTensor) else None,
    )


def fit_pca_mean_baseline(x, n_components: int | None = None) -> CorrCAModel:
    """Principal axes of the across-repetition mean series.

    ``isc`` is the ISC each principal component achieves on ``x``; columns stay
    in variance order so ``isc`` need not be sorted.
    """
    arr = center_per_repetition(as_array(x))
    t, d, n = arr.shape
    mean = arr.mean(axis=2)
    w, u = linalg.eigh(mean.T @ mean)
    order = np.argsort(-w, kind="stable")
    w, u = w[order], u[:, order]
    if n_components is not None:
        w, u = w[:n_components], u[:, :n_components]
    try:
        a = forward_model(u, covariance_pair(arr).r_w)
    except RankError:
        a = u.copy()
    v, a = _sign_fix(u, a)
    rho = isc_of_components(transform(arr, v))
    return CorrCAModel(
        backward=v,
        forward=a,
        isc=rho,
        eigenvalues=w,
        regularization=Regularization(),
        training_dims=(t, d, n),
        degenerate=np.zeros(w.shape, dtype=bool),
        method="pca_mean",
        labels=x.labels if isinstance(x, DataTensor) else None,
    )
