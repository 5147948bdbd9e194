"""Synthetic data with known correlated components, recovery scoring, sweeps.

Generation: ``K`` shared signal series and ``D`` independent noise series per
repetition are mixed by ``A_s = O_s diag(d_s)`` and ``A_n = O_n diag(d_n)``
(random orthonormal columns, log-normal weights scaled to a maximum of 1).
Each mixed part is scaled to unit Frobenius norm per repetition and blended
as ``x = xi * x_s + (1 - xi) * x_n`` with ``xi = 10^(snr/20) / (1 + 10^(snr/20))``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from ._version import __version__
from .data import DataTensor
from .eigensolve import Regularization
from .linear import CorrCAModel, fit, fit_pca_mean_baseline, isc_of_components, transform
from .significance import split_f_test, surrogate_test

__all__ = [
    "SimulationSpec",
    "SimulationDataset",
    "RecoveryMetrics",
    "snr_weight",
    "random_mixing",
    "pink_noise",
    "generate",
    "subspace_angle",
    "evaluate_recovery",
    "run_study",
    "write_study",
]

PROCESSES = ("iid", "pink")
DISTRIBUTIONS = ("gaussian", "chi_squared", "dichotomized")
MIXINGS = ("common", "per_rep")
ISC_PROFILES = ("unit", "linear")
SIGNIFICANCE_METHODS = ("parametric_f", "circular_shift", "phase_scramble")


@dataclass(frozen=True)
class SimulationSpec:
    t_samples: int = 200
    d_features: int = 30
    n_reps: int = 5
    k_shared: int = 10
    snr_db: float = 0.0
    sample_process: str = "iid"
    distribution: str = "gaussian"
    shared_mixing: str = "common"
    noise_mixing: str = "common"
    isc_profile: str = "unit"
    seed: int = 0

    def __post_init__(self):
        from .errors import ValidationError

        if self.t_samples < 2 or self.n_reps < 2 or self.d_features < 1:
            raise ValidationError("need t_samples >= 2, n_reps >= 2, d_features >= 1")
        if not 1 <= self.k_shared <= self.d_features:
            raise ValidationError(f"k_shared must lie in [1, d_features={self.d_features}]")
        for name, value, allowed in (
            ("sample_process", self.sample_process, PROCESSES),
            ("distribution", self.distribution, DISTRIBUTIONS),
            ("shared_mixing", self.shared_mixing, MIXINGS),
            ("noise_mixing", self.noise_mixing, MIXINGS),
            ("isc_profile", self.isc_profile, ISC_PROFILES),
        ):
            if value not in allowed:
                raise ValidationError(f"{name} must be one of {allowed}, got {value!r}")
        if math.isnan(self.snr_db):
            raise ValidationError("snr_db is NaN")


@dataclass(frozen=True)
class SimulationDataset:
    tensor: DataTensor
    true_components: np.ndarray  # (T, K, N)
    signal_mixing: tuple[np.ndarray, ...]  # N matrices (D, K); identical objects when common
    noise_mixing: tuple[np.ndarray, ...]
    spec: SimulationSpec


@dataclass
class RecoveryMetrics:
    mean_isc_train: float
    mean_isc_test: float
    subspace_angle_forward: float
    subspace_angle_components: float
    per_component_corr: np.ndarray
    per_pattern_corr: np.ndarray
    truncated: bool = False
    k_estimated: dict = field(default_factory=dict)


def snr_weight(snr_db: float) -> float:
    """Blend weight ``xi`` of the signal part for a given SNR in dB."""
    if snr_db == math.inf:
        return 1.0
    if snr_db == -math.inf:
        return 0.0
    g = 10.0 ** (snr_db / 20.0)
    return g / (1.0 + g)


def random_mixing(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``O diag(exp(g) / max exp(g))`` with ``O`` having orthonormal columns."""
    q, r = linalg.qr(rng.standard_normal((d, k)), mode="economic")
    q = q * np.sign(np.diag(r))
    weights = np.exp(rng.standard_normal(k))
    return q * (weights / weights.max())


def pink_noise(t: int, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean, unit-variance series with power spectral density ~ 1/f.

    White Gaussian noise is shaped in the frequency domain by ``1/sqrt(f)``
    (DC removed) and transformed back.
    """
    t = int(t)
    if t < 2:
        raise ValueError("pink noise needs t >= 2")
    spec = np.fft.rfft(rng.standard_normal(t))
    f = np.arange(spec.size, dtype=np.float64)
    f[0] = np.inf
    y = np.fft.irfft(spec / np.sqrt(f), n=t)
    y -= y.mean()
    std = y.std()
    return y / std if std > 0 else y


def _series(t: int, m: int, spec: SimulationSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.sample_process == "pink":
        z = np.stack([pink_noise(t, rng) for _ in range(m)], axis=1) if m else np.zeros((t, 0))
    else:
        z = rng.standard_normal((t, m))
    if spec.distribution == "chi_squared":
        z = z ** 2
        z = (z - z.mean(axis=0)) / z.std(axis=0)
    return z


def _draw_mixing(spec: SimulationSpec, rng: np.random.Generator):
    d, k, n = spec.d_features, spec.k_shared, spec.n_reps
    if spec.shared_mixing == "common":
        a_s = random_mixing(d, k, rng)
        signal = (a_s,) * n
    else:
        signal = tuple(random_mixing(d, k, rng) for _ in range(n))
    if spec.noise_mixing == "common":
        a_n = random_mixing(d, d, rng)
        noise = (a_n,) * n
    else:
        noise = tuple(random_mixing(d, d, rng) for _ in range(n))
    return signal, noise


def generate(
    spec: SimulationSpec,
    rng: np.random.Generator | None = None,
    mixing: tuple | None = None,
) -> SimulationDataset:
    """Draw one dataset.

    Pass ``mixing=(signal_mixing, noise_mixing)`` from an earlier dataset to get
    a held-out set with the same mixing and fresh signal/noise draws.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    t, d, n, k = spec.t_samples, spec.d_features, spec.n_reps, spec.k_shared
    signal_mix, noise_mix = _draw_mixing(spec, rng) if mixing is None else mixing

    shared = _series(t, k, spec, rng)
    if spec.isc_profile == "linear":
        # per-component share c_k of a common series gives ISC ~ c_k, from 1 down to 1/K
        c = np.linspace(1.0, 1.0 / k, k)
        comps = np.stack(
            [np.sqrt(c) * shared + np.sqrt(1.0 - c) * _series(t, k, spec, rng) for _ in range(n)],
            axis=2,
        )
    else:
        comps = np.repeat(shared[:, :, None], n, axis=2)

    xi = snr_weight(spec.snr_db)
    x = np.empty((t, d, n))
    for l in range(n):
        xs = comps[:, :, l] @ signal_mix[l].T
        xn = _series(t, d, spec, rng) @ noise_mix[l].T
        xs = xs / np.linalg.norm(xs)
        xn = xn / np.linalg.norm(xn)
        x[:, :, l] = xi * xs + (1.0 - xi) * xn
    if spec.distribution == "dichotomized":
        x = np.where(x >= 0, 1.0, -1.0)
    return SimulationDataset(
        tensor=DataTensor(x),
        true_components=comps,
        signal_mixing=tuple(signal_mix),
        noise_mixing=tuple(noise_mix),
        spec=spec,
    )


# ---------------------------------------------------------------------------
# scoring


def subspace_angle(a, b) -> float:
    """Largest principal angle between ``span(a)`` and ``span(b)``, scaled to [0, 1]."""
    angles = linalg.subspace_angles(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    return float(min(max(angles.max() / (np.pi / 2.0), 0.0), 1.0))


def _flatten(series: np.ndarray) -> np.ndarray:
    """(T, J, N) -> (T*N, J) after per-repetition centering."""
    dev = series - series.mean(axis=0, keepdims=True)
    return dev.transpose(2, 0, 1).reshape(-1, series.shape[1])


def _abs_corr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (a.T @ b) / np.outer(na, nb)
    return np.nan_to_num(np.abs(c))


def _greedy_match(corr: np.ndarray) -> np.ndarray:
    """Best |corr| per true component (rows) under one-to-one greedy matching."""
    corr = corr.copy()
    out = np.zeros(corr.shape[0])
    for _ in range(min(corr.shape)):
        i, j = np.unravel_index(np.argmax(corr), corr.shape)
        out[i] = corr[i, j]
        corr[i, :] = -1.0
        corr[:, j] = -1.0
    return out


def evaluate_recovery(dataset: SimulationDataset, model: CorrCAModel, heldout: SimulationDataset) -> RecoveryMetrics:
    """Score a model against the known truth of ``dataset`` and ``heldout``.

    ISC is averaged over the first K components. If the model has fewer than K
    components, the available prefix is used and ``truncated`` is set.
    """
    k = dataset.spec.k_shared
    j = min(k, model.j_components)
    truncated = j < k
    isc_train = isc_of_components(transform(dataset.tensor, model))[:j]
    isc_test = isc_of_components(transform(heldout.tensor, model))[:j]

    a_hat = model.forward[:, :j]
    unique_mix = {id(a): a for a in dataset.signal_mixing}.values()
    angle_fwd = float(np.mean([subspace_angle(a_hat, a) for a in unique_mix]))

    y = transform(dataset.tensor, model).values[:, :j]
    s_flat = _flatten(dataset.true_components)
    y_flat = _flatten(y)
    angle_comp = subspace_angle(y_flat, s_flat)

    comp_corr = _greedy_match(_abs_corr(s_flat, y_flat))
    pattern_corr = np.mean(
        [_greedy_match(_abs_corr(a, a_hat)) for a in unique_mix], axis=0
    )
    return RecoveryMetrics(
        mean_isc_train=float(np.nanmean(isc_train)),
        mean_isc_test=float(np.nanmean(isc_test)),
        subspace_angle_forward=angle_fwd,
        subspace_angle_components=angle_comp,
        per_component_corr=comp_corr,
        per_pattern_corr=pattern_corr,
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# studies


def _cell_rngs(seed: int, cell: int, rep: int):
    ss = np.random.SeedSequence([int(seed), int(cell), int(rep)])
    train_ss, test_ss, sig_ss = ss.spawn(3)
    sig_seed = int(sig_ss.generate_state(1)[0])
    return np.random.default_rng(train_ss), np.random.default_rng(test_ss), sig_seed


def _estimate_k(x, method, reg, alpha, n_surrogates, n_splits, seed, observed, n_jobs):
    if method == "parametric_f":
        return split_f_test(x, reg=reg, alpha=alpha, n_splits=n_splits, seed=seed).k_significant
    return surrogate_test(
        x, method=method, n_surrogates=n_surrogates, alpha=alpha, seed=seed, reg=reg,
        observed=observed, n_jobs=n_jobs,
    ).k_significant


def run_study(
    grid: Sequence[SimulationSpec],
    repetitions: int = 20,
    methods: Iterable[str] = (),
    seed: int = 0,
    reg: "Regularization | str | None" = None,
    n_surrogates: int = 200,
    n_splits: int = 100,
    alpha: float = 0.05,
    baseline: bool = True,
    n_jobs: int = 1,
) -> dict:
    """Run every grid cell ``repetitions`` times.

    Returns ``{"rows": [...], "summary": [...], "config": {...}}``: one row per
    (cell, repetition) and per-cell mean/std/median aggregates. Each
    (cell, repetition) draws from its own stream derived from ``seed`` (the
    ``seed`` field of each spec is ignored), so results do not depend on
    execution order.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty study grid")
    methods = tuple(methods)
    for m in methods:
        if m not in SIGNIFICANCE_METHODS:
            raise ValueError(f"unknown significance method {m!r}")
    reg = Regularization.parse(reg)
    rows = []
    for c, spec in enumerate(grid):
        for r in range(int(repetitions)):
            rng_train, rng_test, sig_seed = _cell_rngs(seed, c, r)
            train = generate(spec, rng=rng_train)
            test = generate(spec, rng=rng_test, mixing=(train.signal_mixing, train.noise_mixing))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit(train.tensor, reg)
            met = evaluate_recovery(train, model, test)
            row = {"cell": c, "repetition": r}
            row.update({key: val for key, val in asdict(spec).items() if key != "seed"})
            row.update(
                mean_isc_train=met.mean_isc_train,
                mean_isc_test=met.mean_isc_test,
                angle_forward=met.subspace_angle_forward,
                angle_components=met.subspace_angle_components,
                mean_component_corr=float(np.mean(met.per_component_corr)),
                mean_pattern_corr=float(np.mean(met.per_pattern_corr)),
            )
            if baseline:
                pca = fit_pca_mean_baseline(train.tensor)
                pmet = evaluate_recovery(train, pca, test)
                row.update(pca_isc_train=pmet.mean_isc_train, pca_isc_test=pmet.mean_isc_test)
            for m in methods:
                row[f"k_{m}"] = _estimate_k(
                    train.tensor, m, reg, alpha, n_surrogates, n_splits, sig_seed, model.isc, n_jobs
                )
            rows.append(row)
    return {
        "config": {
            "version": __version__,
            "seed": int(seed),
            "repetitions": int(repetitions),
            "methods": list(methods),
            "regularization": str(reg),
            "n_surrogates": int(n_surrogates),
            "n_splits": int(n_splits),
            "alpha": float(alpha),
            "baseline": bool(baseline),
            "grid": [asdict(s) for s in grid],
        },
        "rows": rows,
        "summary": summarize(rows, len(grid)),
    }


_SPEC_KEYS = tuple(f for f in SimulationSpec.__dataclass_fields__ if f != "seed")


def summarize(rows: list[dict], n_cells: int) -> list[dict]:
    out = []
    for c in range(n_cells):
        cell_rows = [r for r in rows if r["cell"] == c]
        if not cell_rows:
            continue
        agg = {"cell": c}
        agg.update({k: cell_rows[0][k] for k in _SPEC_KEYS})
        agg["n"] = len(cell_rows)
        for key in cell_rows[0]:
            if key in ("cell", "repetition") or key in _SPEC_KEYS:
                continue
            vals = np.array([r[key] for r in cell_rows], dtype=np.float64)
            if key.startswith("k_"):
                agg[f"{key}_median"] = float(np.median(vals))
            agg[f"{key}_mean"] = float(np.mean(vals))
            agg[f"{key}_std"] = float(np.std(vals))
        out.append(agg)
    return out


def write_study(result: dict, out_dir) -> tuple[Path, Path]:
    """``results.csv`` (one row per cell-repetition) and ``summary.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = result["rows"]
    csv_path = out_dir / "results.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    json_path = out_dir / "summary.json"
    payload = {"config": result["config"], "summary": result["summary"]}
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def sweep(base: SimulationSpec, **axes) -> list[SimulationSpec]:
    """Cartesian grid over the given fields, e.g. ``sweep(base, snr_db=[-40, 0, 40])``."""
    names = list(axes)
    return [replace(base, **dict(zip(names, combo))) for combo in itertools.product(*axes.values())]
