"""Significance of correlated components.

Three tests estimate how many components are reliably correlated:

* ``parametric_f_test``: F-distribution p-values for ISC measured on held-out
  IID data, Bonferroni-corrected over the components tested.
* ``surrogate_test`` with ``circular_shift`` or ``phase_scramble`` surrogates:
  every surrogate is refit and its *largest* ISC recorded. Each observed ISC
  is compared against that max-statistic null, which absorbs the multiple
  comparisons.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import DataTensor, as_array
from .eigensolve import Regularization
from .errors import ValidationError
from .linear import f_statistic, fit, isc_of_components, transform

__all__ = [
    "SignificanceReport",
    "parametric_f_test",
    "split_f_test",
    "circular_shift_surrogate",
    "phase_scramble_surrogate",
    "surrogate_test",
    "surrogate_rng",
]

METHODS = ("parametric_f", "circular_shift", "phase_scramble")


@dataclass(frozen=True)
class SignificanceReport:
    method: str
    p_values: np.ndarray
    alpha: float
    significant: np.ndarray
    isc: np.ndarray
    n_surrogates: int | None = None
    seed: int | None = None
    threshold: float | None = None
    k_estimate: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def k_significant(self) -> float:
        """Number of significant components.

        Components are tested independently; this is the count of raw
        per-component decisions, or the median count over splits for
        :func:`split_f_test`.
        """
        if self.k_estimate is not None:
            return self.k_estimate
        return int(np.sum(self.significant))

    def to_dict(self) -> dict:
        comps = [
            {
                "isc": None if np.isnan(r) else float(r),
                "p": float(p),
                "significant": bool(s),
            }
            for r, p, s in zip(self.isc, self.p_values, self.significant)
        ]
        out = {
            "method": self.method,
            "alpha": self.alpha,
            "seed": self.seed,
            "n_surrogates": self.n_surrogates,
            "threshold": self.threshold,
            "k_significant": self.k_significant,
            "components": comps,
        }
        out.update(self.extra)
        return out


# ---------------------------------------------------------------------------
# parametric


def parametric_f_test(isc_test, t: int, n: int, alpha: float = 0.05, n_tests: int | None = None) -> SignificanceReport:
    """F-test on ISC from *unseen* test data with ``t`` IID samples.

    Significant iff ``p < alpha / n_tests`` (default: number of components).
    ISC values at or above 1 get ``p = 0`` and are flagged ``saturated``.
    Not valid for ISC measured on the data the projections were fit to.
    """
    rho = np.atleast_1d(np.asarray(isc_test, dtype=np.float64))
    f, d1, d2 = f_statistic(rho, t, n)
    f = np.atleast_1d(f)
    p = stats.f.sf(f, d1, d2)
    saturated = rho >= 1.0
    p = np.where(saturated, 0.0, p)
    p = np.where(np.isnan(rho), 1.0, p)
    m = rho.size if n_tests is None else int(n_tests)
    threshold = alpha / m
    return SignificanceReport(
        method="parametric_f",
        p_values=p,
        alpha=alpha,
        significant=p < threshold,
        isc=rho,
        threshold=threshold,
        extra={"dof": [d1, d2], "saturated": saturated.tolist()},
    )


def split_f_test(
    x,
    reg: "Regularization | str | None" = None,
    alpha: float = 0.05,
    n_splits: int = 100,
    seed: int = 0,
) -> SignificanceReport:
    """Parametric test over random half/half train/test splits of the samples.

    Each split fits on one half and F-tests the other; the reported K is the
    median count across splits. With ``n_splits=1`` this is the single-split
    test, and its p-values are returned as is. For more splits the
    per-component p-values are medians across splits.
    """
    arr = as_array(x)
    t = arr.shape[0]
    if t < 4:
        raise ValidationError("split F-test needs T >= 4")
    rng = np.random.default_rng(seed)
    counts, pvals, iscs = [], [], []
    for _ in range(int(n_splits)):
        perm = rng.permutation(t)
        half = t // 2
        train, test = np.sort(perm[:half]), np.sort(perm[half:])
        model = fit(arr[train], reg)
        rho = isc_of_components(transform(arr[test], model))
        rep = parametric_f_test(rho, len(test), arr.shape[2], alpha, n_tests=arr.shape[1])
        counts.append(rep.k_significant)
        pvals.append(rep.p_values)
        iscs.append(rho)
    width = min(len(p) for p in pvals)
    p_med = np.median([p[:width] for p in pvals], axis=0)
    isc_med = np.median([r[:width] for r in iscs], axis=0)
    k = float(np.median(counts))
    k = int(k) if k.is_integer() else k
    threshold = alpha / arr.shape[1]
    return SignificanceReport(
        method="parametric_f",
        p_values=p_med,
        alpha=alpha,
        significant=p_med < threshold,
        isc=isc_med,
        seed=seed,
        threshold=threshold,
        k_estimate=k,
        extra={"n_splits": int(n_splits), "k_per_split": counts},
    )


# ---------------------------------------------------------------------------
# surrogates


def surrogate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for surrogate ``index``; order of evaluation is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def circular_shift_surrogate(x, rng: np.random.Generator | None = None, offsets=None):
    """Rotate each repetition in time by its own random offset.

    The sample at index ``i`` moves to ``(i + o_l) mod T``; all features of a
    repetition share the offset.
    """
    arr = as_array(x)
    t, _, n = arr.shape
    if offsets is None:
        rng = rng or np.random.default_rng()
        offsets = rng.integers(0, t, size=n)
    offsets = np.asarray(offsets, dtype=int)
    if offsets.shape != (n,):
        raise ValidationError(f"need {n} offsets, got {offsets.shape}")
    out = np.stack([np.roll(arr[:, :, l], offsets[l], axis=0) for l in range(n)], axis=2)
    return x.replace_values(out) if isinstance(x, DataTensor) else out


def phase_scramble_surrogate(x, rng: np.random.Generator | None = None, phases=None):
    """Add random Fourier phases, shared across features, to each repetition.

    Amplitude spectra and within-repetition cross-spectra are preserved.
    ``phases`` may be given as shape ``(n_freq, N)`` with ``n_freq = T//2 + 1``;
    DC (and Nyquist for even T) phases are forced to zero.
    """
    arr = as_array(x)
    t, _, n = arr.shape
    if t < 3:
        raise ValidationError("phase scrambling needs T >= 3")
    n_freq = t // 2 + 1
    if phases is None:
        rng = rng or np.random.default_rng()
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_freq, n))
    phases = np.array(phases, dtype=np.float64)
    if phases.shape != (n_freq, n):
        raise ValidationError(f"phases must have shape {(n_freq, n)}, got {phases.shape}")
    phases[0] = 0.0
    if t % 2 == 0:
        phases[-1] = 0.0
    spec = np.fft.rfft(arr, axis=0)
    spec = spec * np.exp(1j * phases)[:, None, :]
    out = np.fft.irfft(spec, n=t, axis=0)
    return x.replace_values(out) if isinstance(x, DataTensor) else out


_SURROGATES = {
    "circular_shift": circular_shift_surrogate,
    "phase_scramble": phase_scramble_surrogate,
}


def _surrogate_max(arr, method, reg, seed, index):
    surr = _SURROGATES[method](arr, surrogate_rng(seed, index))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rho = fit(surr, reg).isc
    return np.nanmax(rho)


def surrogate_test(
    x,
    method: str = "circular_shift",
    n_surrogates: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    reg: "Regularization | str | None" = None,
    n_jobs: int = 1,
    observed=None,
) -> SignificanceReport:
    """Max-statistic surrogate test on training ISC.

    ``p_d = (1 + #{surrogate max >= rho_d}) / (n_surrogates + 1)``. Surrogates
    are refit with the same regularization. Results depend only on
    ``(x, method, n_surrogates, seed, reg)``, not on ``n_jobs``.
    """
    if method not in _SURROGATES:
        raise ValidationError(f"unknown surrogate method {method!r}; choose from {sorted(_SURROGATES)}")
    arr = as_array(x)
    if method == "phase_scramble" and arr.shape[0] < 3:
        raise ValidationError("phase scrambling needs T >= 3")
    n_surrogates = int(n_surrogates)
    if n_surrogates < 1:
        raise ValidationError("need at least one surrogate")
    if n_surrogates < 1.0 / alpha:
        warnings.warn(f"{n_surrogates} surrogates cannot resolve alpha={alpha}", RuntimeWarning, stacklevel=2)
    reg = Regularization.parse(reg)
    rho = np.asarray(fit(arr, reg).isc if observed is None else observed, dtype=np.float64)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            null = list(pool.map(lambda i: _surrogate_max(arr, method, reg, seed, i), range(n_surrogates)))
    else:
        null = [_surrogate_max(arr, method, reg, seed, i) for i in range(n_surrogates)]
    null = np.asarray(null)
    exceed = (null[None, :] >= rho[:, None]).sum(axis=1)
    p = (1.0 + exceed) / (n_surrogates + 1.0)
    p = np.where(np.isnan(rho), 1.0, p)
    return SignificanceReport(
        method=method,
        p_values=p,
        alpha=alpha,
        significant=p < alpha,
        isc=rho,
        n_surrogates=n_surrogates,
        seed=seed,
        threshold=alpha,
        extra={"regularization": str(reg)},
    )
