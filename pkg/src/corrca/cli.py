"""Command-line front end.

Exit codes: 0 success, 2 invalid input (bad data, dimensions, missing files,
bad flags), 3 numerical failure (non-definite or rank-deficient matrices;
the message names the regularization remedy).

Every JSON output embeds the tool version, the resolved configuration and
the seed. Outputs are byte-identical across reruns with the same flags.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ._version import __version__
from .data import DataTensor, load_dataset, save_dataset
from .eigensolve import Regularization
from .errors import DefinitenessError, DimensionError, RankError, ValidationError
from .kernel import KernelCorrCAModel, KernelSpec, fit_kernel, transform_kernel
from .linear import CorrCAModel, fit, isc_of_components, isc_statistics, transform
from .mcca import MCCAModel, fit_mcca, transform_mcca
from .serialize import _mat, dumps, load_model, model_to_dict, save_model
from .significance import parametric_f_test, split_f_test, surrogate_test
from .simulation import SimulationSpec, generate, run_study, sweep, write_study

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3

_TEST_METHODS = {
    "f": "parametric_f",
    "parametric_f": "parametric_f",
    "circular": "circular_shift",
    "circular_shift": "circular_shift",
    "phase": "phase_scramble",
    "phase_scramble": "phase_scramble",
}


def _reg(text: str) -> Regularization:
    try:
        return Regularization.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_spec_flags(p: argparse.ArgumentParser, as_list: bool) -> None:
    base = SimulationSpec()
    num = (lambda f: f) if not as_list else (lambda f: {int: _int_list, float: _float_list}[f])
    txt = str if not as_list else _str_list
    p.add_argument("--t", dest="t_samples", type=num(int), default=base.t_samples, help="samples per repetition")
    p.add_argument("--d", dest="d_features", type=num(int), default=base.d_features, help="features")
    p.add_argument("--n", dest="n_reps", type=num(int), default=base.n_reps, help="repetitions")
    p.add_argument("--k", dest="k_shared", type=num(int), default=base.k_shared, help="shared components")
    p.add_argument("--snr", dest="snr_db", type=num(float), default=base.snr_db, help="SNR in dB")
    p.add_argument("--process", dest="sample_process", type=txt, default=base.sample_process, help="iid | pink")
    p.add_argument("--distribution", type=txt, default=base.distribution, help="gaussian | chi_squared | dichotomized")
    p.add_argument("--shared-mixing", type=txt, default=base.shared_mixing, help="common | per_rep")
    p.add_argument("--noise-mixing", type=txt, default=base.noise_mixing, help="common | per_rep")
    p.add_argument("--isc-profile", type=txt, default=base.isc_profile, help="unit | linear")


_SPEC_FIELDS = tuple(f for f in SimulationSpec.__dataclass_fields__ if f != "seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrca", description="Correlated components analysis")
    parser.add_argument("--version", action="version", version=f"corrca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write model.json + report.json")
    p.add_argument("data", help="dataset directory or manifest.json")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--method", choices=("corrca", "mcca", "kernel"), default="corrca")
    p.add_argument("--reg", type=_reg, default=None, help="none | tsvd:K | shrinkage:gamma")
    p.add_argument("--n-components", type=int, default=None)
    p.add_argument("--kernel", choices=("gaussian", "tanh"), default="gaussian")
    p.add_argument("--bandwidth", type=float, default=None, help="gaussian bandwidth (default: median heuristic)")
    p.add_argument("--kernel-scale", type=float, default=1.0)
    p.add_argument("--kernel-offset", type=float, default=0.0)
    p.add_argument("--kernel-variant", choices=("mean", "full"), default="mean")
    p.add_argument("--seed", type=int, default=0, help="recorded for auditability; fitting is deterministic")

    p = sub.add_parser("transform", help="project a dataset; one CSV per repetition")
    p.add_argument("model", help="model.json from fit")
    p.add_argument("data", help="dataset directory or manifest.json")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--n-components", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("test", help="estimate the number of significant components")
    p.add_argument("data", help="dataset directory or manifest.json")
    p.add_argument("-o", "--output", default=None, help="report path (default: stdout)")
    p.add_argument("--method", choices=sorted(_TEST_METHODS), default="f")
    p.add_argument("--model", default=None, help="F-test this model on DATA as held-out data")
    p.add_argument("--split", type=int, default=1, help="number of random half/half splits for the F-test")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--n-surrogates", type=int, default=1000)
    p.add_argument("--reg", type=_reg, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker threads for surrogates (result unchanged)")

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("-o", "--output", required=True, help="dataset directory")
    p.add_argument("--heldout", default=None, help="also write a held-out dataset with the same mixing here")
    _add_spec_flags(p, as_list=False)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("study", help="run a simulation grid; writes results.csv + summary.json")
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_spec_flags(p, as_list=True)
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--methods", type=_str_list, default=[], help="comma list of f, circular, phase")
    p.add_argument("--reg", type=_reg, default=None)
    p.add_argument("--n-surrogates", type=int, default=200)
    p.add_argument("--n-splits", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--no-baseline", action="store_true", help="skip the PCA-of-mean baseline")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("report", help="print a summary of a saved model")
    p.add_argument("model", help="model.json")
    p.add_argument("--t", dest="t_samples", type=int, default=None, help="samples for the F statistic")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _config(args) -> dict:
    out = {}
    for key, val in sorted(vars(args).items()):
        if key == "jobs":  # execution detail; results do not depend on it
            continue
        if key == "reg" or isinstance(val, Regularization):
            val = str(Regularization.parse(val))
        out[key] = val
    return out


def _envelope(args, payload: dict) -> dict:
    return {"version": __version__, "command": args.command, "seed": args.seed, "config": _config(args), **payload}


def _emit(obj: dict, output) -> None:
    text = dumps(obj)
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text)


def _model_report(model, t: int | None = None) -> dict:
    if isinstance(model, KernelCorrCAModel):
        t0, _, n = model.training_reference.shape
    else:
        t0, _, n = model.training_dims
    stats = isc_statistics(model.isc, t0 if t is None else t, n)
    comps = []
    for j, rho in enumerate(model.isc):
        entry = {
            "index": j,
            "isc": None if np.isnan(rho) else float(rho),
            "snr": None if np.isnan(stats.snr[j]) else float(stats.snr[j]),
            "f": None if not np.isfinite(stats.f_value[j]) else float(stats.f_value[j]),
            "saturated": bool(stats.saturated[j]),
        }
        if hasattr(model, "degenerate"):
            entry["degenerate"] = bool(model.degenerate[j])
        comps.append(entry)
    out = {"kind": model_to_dict(model)["kind"], "dof": list(stats.dof), "components": comps}
    if isinstance(model, CorrCAModel):
        out["backward"] = _mat(model.backward)
        out["forward"] = _mat(model.forward)
    elif isinstance(model, MCCAModel):
        out["backward_per_rep"] = [_mat(v) for v in model.backward_per_rep]
    return out


def _cmd_fit(args) -> int:
    x = load_dataset(args.data)
    if args.method == "corrca":
        model = fit(x, args.reg, args.n_components)
    elif args.method == "mcca":
        model = fit_mcca(x, args.reg, args.n_components)
    else:
        spec = KernelSpec(
            kind=args.kernel,
            bandwidth=args.bandwidth,
            scale=args.kernel_scale,
            offset=args.kernel_offset,
            model_variant=args.kernel_variant,
        )
        model = fit_kernel(x, spec, args.reg, args.n_components)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    report = _model_report(model)
    report["regularization"] = str(model.regularization)
    if isinstance(model, KernelCorrCAModel):
        report["kernel"] = model_to_dict(model)["kernel"]
    _emit(_envelope(args, report), out / "report.json")
    return EXIT_OK


def _project(model, x, j):
    if isinstance(model, CorrCAModel):
        y = transform(x, model)
    elif isinstance(model, MCCAModel):
        y = transform_mcca(x, model)
    else:
        y = transform_kernel(x, model)
    if j is not None:
        if not 1 <= j <= y.values.shape[1]:
            raise DimensionError(f"--n-components {j} outside [1, {y.values.shape[1]}]")
        return y.values[:, :j]
    return y.values


def _cmd_transform(args) -> int:
    model = load_model(args.model)
    x = load_dataset(args.data)
    y = _project(model, x, args.n_components)
    out = Path(args.output)
    save_dataset(DataTensor(y, repetition_ids=x.repetition_ids), out)
    isc = isc_of_components(y) if y.shape[2] >= 2 else np.full(y.shape[1], np.nan)
    _emit(_envelope(args, {"shape": list(y.shape), "isc": _mat(isc)}), out / "transform.json")
    return EXIT_OK


def _cmd_test(args) -> int:
    method = _TEST_METHODS[args.method]
    x = load_dataset(args.data)
    if method == "parametric_f":
        if args.model is not None:
            model = load_model(args.model)
            rho = isc_of_components(_project(model, x, None))
            rep = parametric_f_test(rho, x.t, x.n, args.alpha)
        else:
            rep = split_f_test(x, args.reg, args.alpha, n_splits=args.split, seed=args.seed)
    else:
        if args.model is not None:
            raise ValidationError("surrogate tests refit on DATA; --model applies to the F-test only")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = surrogate_test(
                x, method, args.n_surrogates, args.alpha, args.seed, args.reg, n_jobs=args.jobs
            )
    _emit(_envelope(args, {"report": rep.to_dict()}), args.output)
    return EXIT_OK


def _spec_from_args(args) -> SimulationSpec:
    return SimulationSpec(**{f: getattr(args, f) for f in _SPEC_FIELDS}, seed=args.seed)


def _cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    rng = np.random.default_rng(spec.seed)
    ds = generate(spec, rng=rng)
    save_dataset(ds.tensor, args.output)
    truth = {
        "spec": asdict(spec),
        "signal_mixing": [_mat(a) for a in ds.signal_mixing],
        "noise_mixing": [_mat(a) for a in ds.noise_mixing],
        "true_components": [_mat(ds.true_components[:, :, l]) for l in range(spec.n_reps)],
    }
    _emit(_envelope(args, truth), Path(args.output) / "simulation.json")
    if args.heldout is not None:
        held = generate(spec, rng=rng, mixing=(ds.signal_mixing, ds.noise_mixing))
        save_dataset(held.tensor, args.heldout)
        _emit(
            _envelope(args, {"spec": asdict(spec), "heldout_of": str(args.output)}),
            Path(args.heldout) / "simulation.json",
        )
    return EXIT_OK


def _cmd_study(args) -> int:
    axes = {f: v if isinstance(v, list) else [v] for f in _SPEC_FIELDS for v in [getattr(args, f)]}
    grid = sweep(SimulationSpec(), **axes)
    methods = tuple(_TEST_METHODS.get(m, m) for m in args.methods)
    result = run_study(
        grid,
        repetitions=args.repetitions,
        methods=methods,
        seed=args.seed,
        reg=args.reg,
        n_surrogates=args.n_surrogates,
        n_splits=args.n_splits,
        alpha=args.alpha,
        baseline=not args.no_baseline,
        n_jobs=args.jobs,
    )
    result["config"]["cli"] = _config(args)
    write_study(result, args.output)
    return EXIT_OK


def _cmd_report(args) -> int:
    model = load_model(args.model)
    _emit(_envelope(args, _model_report(model, args.t_samples)), args.output)
    return EXIT_OK


_COMMANDS = {
    "fit": _cmd_fit,
    "transform": _cmd_transform,
    "test": _cmd_test,
    "simulate": _cmd_simulate,
    "study": _cmd_study,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DefinitenessError, RankError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, DimensionError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
