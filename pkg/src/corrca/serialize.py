"""JSON round-trip for fitted models.

Matrices are nested row-major lists; NaN is written as ``null``. Kernel models
embed the training tensor, which out-of-sample transforms need.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ._version import __version__
from .eigensolve import Regularization
from .errors import ValidationError
from .kernel import KernelCorrCAModel, KernelSpec
from .linear import CorrCAModel
from .mcca import MCCAModel

__all__ = ["model_to_dict", "model_from_dict", "save_model", "load_model", "dumps"]


def _mat(a) -> list:
    a = np.asarray(a, dtype=np.float64)
    return [None if np.isnan(v) else float(v) for v in a] if a.ndim == 1 else [_mat(r) for r in a]


def _arr(obj, ndim: int) -> np.ndarray:
    out = np.array(obj if obj is not None else [], dtype=np.float64)
    if out.ndim != ndim and out.size == 0:
        out = out.reshape((0,) * ndim)
    return out


def model_to_dict(model) -> dict:
    if isinstance(model, CorrCAModel):
        return {
            "kind": "corrca",
            "version": __version__,
            "method": model.method,
            "dims": dict(zip(("t", "d", "n"), map(int, model.training_dims))),
            "regularization": str(model.regularization),
            "backward": _mat(model.backward),
            "forward": _mat(model.forward),
            "isc": _mat(model.isc),
            "eigenvalues": _mat(model.eigenvalues),
            "degenerate": [bool(v) for v in model.degenerate],
            "labels": None if model.labels is None else list(model.labels),
        }
    if isinstance(model, MCCAModel):
        return {
            "kind": "mcca",
            "version": __version__,
            "dims": dict(zip(("t", "d", "n"), map(int, model.training_dims))),
            "regularization": str(model.regularization),
            "backward_per_rep": [_mat(v) for v in model.backward_per_rep],
            "isc": _mat(model.isc),
            "eigenvalues": _mat(model.eigenvalues),
            "degenerate": [bool(v) for v in model.degenerate],
        }
    if isinstance(model, KernelCorrCAModel):
        ref = model.training_reference
        k = model.kernel
        return {
            "kind": "kernel",
            "version": __version__,
            "dims": dict(zip(("t", "d", "n"), map(int, ref.shape))),
            "regularization": str(model.regularization),
            "kernel": {
                "kind": k.kind,
                "bandwidth": k.bandwidth,
                "scale": k.scale,
                "offset": k.offset,
                "model_variant": k.model_variant,
            },
            "alpha": _mat(model.alpha),
            "isc": _mat(model.isc),
            "eigenvalues": _mat(model.eigenvalues),
            # (N, T, D): one row-major sample matrix per repetition
            "training_reference": [_mat(ref[:, :, l]) for l in range(ref.shape[2])],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(obj: dict):
    try:
        kind = obj["kind"]
        dims = obj["dims"]
        reg = Regularization.parse(obj["regularization"])
        if kind == "corrca":
            return CorrCAModel(
                backward=_arr(obj["backward"], 2),
                forward=_arr(obj["forward"], 2),
                isc=_arr(obj["isc"], 1),
                eigenvalues=_arr(obj["eigenvalues"], 1),
                regularization=reg,
                training_dims=(dims["t"], dims["d"], dims["n"]),
                degenerate=np.array(obj["degenerate"], dtype=bool),
                method=obj.get("method", "corrca"),
                labels=None if obj.get("labels") is None else tuple(obj["labels"]),
            )
        if kind == "mcca":
            return MCCAModel(
                backward_per_rep=tuple(_arr(v, 2) for v in obj["backward_per_rep"]),
                eigenvalues=_arr(obj["eigenvalues"], 1),
                isc=_arr(obj["isc"], 1),
                regularization=reg,
                training_dims=(dims["t"], dims["d"], dims["n"]),
                degenerate=np.array(obj["degenerate"], dtype=bool),
            )
        if kind == "kernel":
            ref = np.stack([_arr(m, 2) for m in obj["training_reference"]], axis=2)
            return KernelCorrCAModel(
                alpha=_arr(obj["alpha"], 2),
                kernel=KernelSpec(**obj["kernel"]),
                training_reference=ref,
                isc=_arr(obj["isc"], 1),
                eigenvalues=_arr(obj["eigenvalues"], 1),
                regularization=reg,
            )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model JSON: {exc}") from None
    raise ValidationError(f"unknown model kind {kind!r}")


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, trailing newline)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def save_model(model, path) -> Path:
    path = Path(path)
    path.write_text(dumps(model_to_dict(model)))
    return path


def load_model(path):
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return model_from_dict(obj)
