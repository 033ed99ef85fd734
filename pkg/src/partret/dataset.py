"""In-memory data model, CSV ingestion and response preprocessing.

A :class:`Dataset` holds an ``n x S`` matrix of small non-negative integer
category codes together with a real response vector.  Instances are
immutable: the arrays are flagged read-only, so a dataset can be shared by
any number of workers.
"""
from __future__ import annotations

import csv
import dataclasses
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

RANDOM_Y = "random_y"
SPECIFIED_Y = "specified_y"
Y_MODELS = (RANDOM_Y, SPECIFIED_Y)

# codes are stored as uint8; discretized or pre-coded columns beyond this are rejected
MAX_ARITY = 255


class DataError(ValueError):
    """Raised for malformed input data (bad CSV cells, constant response...)."""


@dataclass(frozen=True)
class Dataset:
    """Discrete explanatory matrix plus response.

    Attributes
    ----------
    x : ndarray of uint8, shape (n, S)
        Category codes; column ``s`` takes values in ``0 .. arity[s]-1``.
    arity : ndarray of int64, shape (S,)
        Number of categories of each column (at least 2).
    y : ndarray of float64, shape (n,)
        Response.
    y_model : str
        ``"random_y"`` or ``"specified_y"``.
    names : tuple of str
        Column identifiers.
    warnings : tuple of str
        Non-fatal ingestion notes (e.g. constant columns).
    """

    x: np.ndarray
    arity: np.ndarray
    y: np.ndarray
    y_model: str = RANDOM_Y
    names: tuple = ()
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        x = np.array(self.x, copy=True)
        if x.ndim != 2:
            raise DataError("x must be a 2-d matrix of category codes")
        n, S = x.shape
        if n < 1 or S < 1:
            raise DataError(f"need n >= 1 and S >= 1, got n={n}, S={S}")
        if np.issubdtype(x.dtype, np.floating):
            if not np.all(np.isfinite(x)) or np.any(x != np.round(x)):
                raise DataError("category codes must be integers")
        x = x.astype(np.int64)
        if np.any(x < 0):
            raise DataError("category codes must be non-negative")

        if self.arity is None or len(np.atleast_1d(self.arity)) == 0:
            arity = np.maximum(x.max(axis=0) + 1, 2)
        else:
            arity = np.asarray(self.arity, dtype=np.int64).copy()
        if arity.shape != (S,):
            raise DataError(f"arity has shape {arity.shape}, expected ({S},)")
        if np.any(arity < 2):
            raise DataError("every arity must be >= 2")
        if np.any(arity > MAX_ARITY):
            raise DataError(f"arity above {MAX_ARITY} is not supported")
        if np.any(x >= arity[None, :]):
            bad = int(np.nonzero((x >= arity[None, :]).any(axis=0))[0][0])
            raise DataError(f"column {bad} has a code >= its arity {arity[bad]}")

        y = np.asarray(self.y, dtype=np.float64).copy()
        if y.shape != (n,):
            raise DataError(f"y has shape {y.shape}, expected ({n},)")
        if not np.all(np.isfinite(y)):
            raise DataError("response contains non-finite values")
        if self.y_model not in Y_MODELS:
            raise DataError(f"unknown y_model {self.y_model!r}")

        names = tuple(self.names) if self.names else tuple(f"X{s + 1}" for s in range(S))
        if len(names) != S:
            raise DataError(f"{len(names)} names for {S} columns")

        xc = x.astype(np.uint8)
        for arr in (xc, arity, y):
            arr.setflags(write=False)
        object.__setattr__(self, "x", xc)
        object.__setattr__(self, "arity", arity)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def S(self) -> int:
        return self.x.shape[1]

    @property
    def xt(self) -> np.ndarray:
        """Column-major copy of the codes, shape (S, n), cached."""
        cached = self.__dict__.get("_xt")
        if cached is None:
            cached = np.ascontiguousarray(self.x.T)
            cached.setflags(write=False)
            object.__setattr__(self, "_xt", cached)
        return cached

    def with_y(self, y, y_model: str | None = None) -> "Dataset":
        return dataclasses.replace(
            self, y=y, y_model=self.y_model if y_model is None else y_model)

    def subset_columns(self, cols: Sequence[int]) -> "Dataset":
        cols = list(cols)
        return Dataset(self.x[:, cols], self.arity[cols], self.y, self.y_model,
                       tuple(self.names[c] for c in cols))

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown variable {name!r}") from None


@dataclass(frozen=True)
class DiscretizationSpec:
    """Per-variable cutoffs turning continuous columns into ordered codes."""

    cutoffs: Mapping[str, Sequence[float]]

    def __post_init__(self):
        clean = {}
        for name, cuts in self.cutoffs.items():
            cuts = tuple(float(c) for c in cuts)
            _check_cutoffs(cuts)
            if len(cuts) + 1 > MAX_ARITY:
                raise DataError(f"too many cutoffs for {name!r}")
            clean[name] = cuts
        object.__setattr__(self, "cutoffs", clean)

    def arity(self, name: str) -> int:
        return len(self.cutoffs[name]) + 1


def _check_cutoffs(cutoffs):
    c = np.asarray(cutoffs, dtype=float)
    if c.ndim != 1:
        raise DataError("cutoffs must be a flat sequence")
    if c.size and not np.all(np.isfinite(c)):
        raise DataError("cutoffs must be finite")
    if np.any(np.diff(c) <= 0):
        raise DataError("cutoffs must be strictly increasing")
    return c


def discretize(column, cutoffs) -> np.ndarray:
    """Map real values to bin codes.

    The code of a value is the number of cutoffs that are ``<=`` the value, so
    a value equal to a cutoff falls in the upper bin.  With no cutoffs every
    code is 0.
    """
    c = _check_cutoffs(cutoffs)
    v = np.asarray(column, dtype=float)
    return np.searchsorted(c, v, side="right").astype(np.int64)


def normalize_response(d: Dataset) -> Dataset:
    """Center y and scale it to unit second moment (divide-by-n deviation)."""
    y = d.y
    mean = y.mean()
    centered = y - mean
    sd = math.sqrt(float(np.mean(centered * centered)))
    if sd == 0.0 or sd <= 1e-12 * max(1.0, abs(mean)):
        raise DataError("response is constant (zero variance); cannot normalize")
    z = centered / sd
    # second centering pass removes the O(eps) residual mean left by the first
    z = z - z.mean()
    z = z / math.sqrt(float(np.mean(z * z)))
    return d.with_y(z)


def is_normalized(d: Dataset, tol: float = 1e-9) -> bool:
    return abs(d.y.mean()) < tol and abs(np.mean(d.y * d.y) - 1.0) < tol


def _parse_int_code(text: str):
    t = text.strip()
    if not t or not (t.isdigit() or (t.startswith("+") and t[1:].isdigit())):
        return None
    return int(t)


def load_csv(path, response_column: str, spec: DiscretizationSpec | None = None,
             y_model: str = RANDOM_Y) -> Dataset:
    """Read a comma-separated file with a header row.

    Explanatory columns must hold non-negative integer codes, except columns
    named in ``spec`` which are read as reals and discretized.  Rows with
    empty cells are rejected.  Constant explanatory columns are kept and
    reported in ``Dataset.warnings``.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not (len(r) == 1 and not r[0].strip())]
    if not rows:
        raise DataError(f"{path}: empty file (header row required)")
    header = [h.strip() for h in rows[0]]
    if response_column not in header:
        raise DataError(f"{path}: response column {response_column!r} not in header")
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    body = rows[1:]
    if len(body) < 1:
        raise DataError(f"{path}: no data rows")
    cutoffs = spec.cutoffs if spec is not None else {}
    unknown = set(cutoffs) - set(header)
    if unknown:
        raise DataError(f"{path}: discretization given for unknown columns {sorted(unknown)}")

    ycol = header.index(response_column)
    xcols = [j for j in range(len(header)) if j != ycol]
    if not xcols:
        raise DataError(f"{path}: no explanatory columns")
    n = len(body)
    x = np.zeros((n, len(xcols)), dtype=np.int64)
    y = np.zeros(n)
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(header):
            raise DataError(f"{path}: row {line} has {len(row)} cells, header has {len(header)}")
        cell = row[ycol].strip()
        try:
            y[i] = float(cell)
        except ValueError:
            raise DataError(f"{path}: row {line}, column {response_column!r}: "
                            f"non-numeric response {cell!r}") from None
        if not math.isfinite(y[i]):
            raise DataError(f"{path}: row {line}, column {response_column!r}: non-finite value")
        for k, j in enumerate(xcols):
            name, cell = header[j], row[j].strip()
            if name in cutoffs:
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {line}, column {name!r}: "
                                    f"non-numeric value {cell!r}") from None
                x[i, k] = int(discretize([v], cutoffs[name])[0])
            else:
                code = _parse_int_code(cell)
                if code is None:
                    raise DataError(f"{path}: row {line}, column {name!r}: expected a "
                                    f"non-negative integer code, got {cell!r}")
                x[i, k] = code

    names = tuple(header[j] for j in xcols)
    if np.any(x >= MAX_ARITY):
        bad = names[int(np.nonzero((x >= MAX_ARITY).any(axis=0))[0][0])]
        raise DataError(f"{path}: column {bad!r} has a code above {MAX_ARITY - 1}")
    arity = x.max(axis=0) + 1
    for k, nm in enumerate(names):
        if nm in cutoffs:
            arity[k] = len(cutoffs[nm]) + 1
    arity = np.maximum(arity, 2)
    notes = []
    for k, nm in enumerate(names):
        if np.all(x[:, k] == x[0, k]):
            notes.append(f"column {nm!r} is constant")
    for msg in notes:
        warnings.warn(msg, stacklevel=2)
    return Dataset(x, arity, y, y_model, names, tuple(notes))


def write_csv(d: Dataset, path, response_column: str = "Y", float_format: str = "%.17g"):
    """Write ``d`` in the layout read by :func:`load_csv` (response first).

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(d, path, response_column, float_format)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(d, fh, response_column, float_format)


def _write_rows(d, fh, response_column, float_format):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([response_column, *d.names])
    for i in range(d.n):
        w.writerow([float_format % d.y[i], *(int(v) for v in d.x[i])])
