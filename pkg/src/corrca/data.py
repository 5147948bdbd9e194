"""Data tensors and file-based datasets.

A dataset on disk is a directory holding ``manifest.json`` plus one numeric
CSV per repetition (rows = samples, columns = features)::

    {"repetitions": ["s01.csv", "s02.csv"], "feature_labels": ["Fz", "Cz"],
     "delimiter": ","}

In memory every tensor is a ``(T, D, N)`` float64 array: samples x features x
repetitions.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, ValidationError

MANIFEST_NAME = "manifest.json"

__all__ = [
    "DataTensor",
    "ComponentTensor",
    "DegenerateColumnWarning",
    "as_array",
    "load_dataset",
    "save_dataset",
    "read_table",
    "write_table",
    "center_per_repetition",
    "standardize_per_repetition",
]


class DegenerateColumnWarning(UserWarning):
    """A (repetition, feature) column has zero variance."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DataTensor:
    """Samples x features x repetitions array with optional labels.

    Immutable after construction; ``values`` is a read-only float64 copy.
    """

    values: np.ndarray
    labels: tuple[str, ...] | None = None
    repetition_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 3:
            raise DimensionError(f"expected a (T, D, N) array, got shape {values.shape}")
        t, d, n = values.shape
        if t < 2 or d < 1 or n < 2:
            raise DimensionError(f"need T >= 2, D >= 1, N >= 2; got T={t}, D={d}, N={n}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("tensor contains NaN or Inf values")
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != d:
                raise DimensionError(f"{len(labels)} feature labels for D={d} features")
            object.__setattr__(self, "labels", labels)
        if self.repetition_ids is not None:
            ids = tuple(str(s) for s in self.repetition_ids)
            if len(ids) != n:
                raise DimensionError(f"{len(ids)} repetition ids for N={n} repetitions")
            object.__setattr__(self, "repetition_ids", ids)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def t(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[2]

    def replace_values(self, values) -> "DataTensor":
        """Same labels, new values (shape may change in T only)."""
        return DataTensor(values, labels=self.labels, repetition_ids=self.repetition_ids)

    def take_samples(self, idx) -> "DataTensor":
        return self.replace_values(self.values[np.asarray(idx)])


@dataclass(frozen=True)
class ComponentTensor:
    """Projected data ``y[i, j, l]``: samples x components x repetitions."""

    values: np.ndarray
    repetition_ids: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 3:
            raise DimensionError(f"expected a (T, J, N) array, got shape {values.shape}")
        if values.shape[1] < 1:
            raise DimensionError("component tensor needs at least one component")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def component_count(self) -> int:
        return self.values.shape[1]


def as_array(x) -> np.ndarray:
    """Return the underlying ``(T, D, N)`` float array of a tensor or array."""
    if isinstance(x, (DataTensor, ComponentTensor)):
        return x.values
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise DimensionError(f"expected a (T, D, N) array, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# CSV tables


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_table(path, delimiter: str = ",") -> tuple[np.ndarray, list[str] | None]:
    """Read a numeric CSV into a ``(rows, cols)`` array.

    A first row that is entirely non-numeric is taken as a header. Any other
    non-numeric, NaN or infinite cell raises :class:`ValidationError` naming
    the file and line.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in r)]
    header = None
    if rows and not any(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_line = 2
    else:
        first_line = 1
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        line = r + first_line
        if len(row) != width:
            raise DimensionError(f"{path}:{line}: expected {width} columns, found {len(row)}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ValidationError(f"{path}:{line}: non-numeric cell {cell!r}") from None
            if not np.isfinite(v):
                raise ValidationError(f"{path}:{line}: non-finite cell {cell!r}")
            out[r, c] = v
    return out, header


def write_table(path, values, header: Sequence[str] | None = None, delimiter: str = ",") -> None:
    """Write a 2-D array as CSV using shortest round-trip float formatting."""
    values = np.asarray(values, dtype=np.float64)
    with Path(path).open("w", newline="") as fh:
        if header is not None:
            fh.write(delimiter.join(header) + "\n")
        for row in values:
            fh.write(delimiter.join(repr(float(v)) for v in row) + "\n")


def load_dataset(path) -> DataTensor:
    """Load a dataset directory (or a path to its ``manifest.json``)."""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    if not manifest_path.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{manifest_path}: invalid JSON ({exc})") from None
    reps = manifest.get("repetitions")
    if not isinstance(reps, list) or not reps:
        raise ValidationError(f"{manifest_path}: 'repetitions' must be a non-empty list")
    delimiter = manifest.get("delimiter", ",")
    root = manifest_path.parent
    tables = []
    header = None
    for rel in reps:
        table, hdr = read_table(root / rel, delimiter=delimiter)
        if tables and table.shape != tables[0].shape:
            raise DimensionError(
                f"{root / rel}: shape {table.shape} differs from {root / reps[0]}: {tables[0].shape}"
            )
        tables.append(table)
        header = header or hdr
    labels = manifest.get("feature_labels") or header
    ids = manifest.get("repetition_ids") or [Path(r).stem for r in reps]
    return DataTensor(np.stack(tables, axis=2), labels=labels, repetition_ids=ids)


def save_dataset(x: DataTensor, path, delimiter: str = ",") -> Path:
    """Write ``x`` as a manifest directory; inverse of :func:`load_dataset`."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    ids = x.repetition_ids or tuple(f"rep{l:03d}" for l in range(x.n))
    files = []
    for l, rid in enumerate(ids):
        name = f"{rid}.csv"
        write_table(path / name, x.values[:, :, l], delimiter=delimiter)
        files.append(name)
    manifest = {"repetitions": files, "delimiter": delimiter}
    if x.labels is not None:
        manifest["feature_labels"] = list(x.labels)
    manifest["repetition_ids"] = list(ids)
    (path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    return path


# ---------------------------------------------------------------------------
# preprocessing


def center_per_repetition(x):
    """Subtract each repetition's sample mean from every feature.

    Accepts a :class:`DataTensor` (returns one) or a raw ``(T, D, N)`` array.
    """
    arr = as_array(x)
    out = arr - arr.mean(axis=0, keepdims=True)
    return x.replace_values(out) if isinstance(x, DataTensor) else out


def standardize_per_repetition(x):
    """Center and scale each (feature, repetition) column to unit sample std.

    Zero-variance columns are left at zero and reported through a
    :class:`DegenerateColumnWarning`; rating data often has constant columns.
    """
    arr = as_array(x)
    centered = arr - arr.mean(axis=0, keepdims=True)
    std = centered.std(axis=0, ddof=1, keepdims=True)
    scale = np.abs(arr).max(axis=0, keepdims=True)
    degenerate = std <= 1e-14 * np.maximum(scale, 1e-300)
    safe = np.where(degenerate, 1.0, std)
    out = np.where(degenerate, 0.0, centered / safe)
    if degenerate.any():
        cols = [(int(l), int(d)) for d, l in zip(*np.nonzero(degenerate[0]))]
        warnings.warn(
            f"zero-variance (repetition, feature) columns left at 0: {cols}",
            DegenerateColumnWarning,
            stacklevel=2,
        )
    return x.replace_values(out) if isinstance(x, DataTensor) else out
