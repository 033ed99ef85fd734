"""Partitions induced by variable subsets and the statistics computed on them.

Every quantity here is built from per-cell accumulators: the cell size
``n_j`` and the response sum ``W_j``.  With ``a_j = W_j - n_j * ybar``::

    I = sum(a_j**2) / n
    J = sum(a_j**2 / n_j) / n

so cell means are never formed explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset

_INT64_MAX = np.iinfo(np.int64).max


def _check_subset(d: Dataset, subset) -> list:
    subset = [int(s) for s in subset]
    if not subset:
        raise ValueError("subset must be non-empty")
    if len(set(subset)) != len(subset):
        raise ValueError(f"duplicate variable index in subset {subset}")
    for s in subset:
        if not 0 <= s < d.S:
            raise ValueError(f"variable index {s} out of range 0..{d.S - 1}")
    return subset


def radix_strides(arities: Sequence[int]) -> np.ndarray:
    """Mixed-radix place values, first variable most significant.

    Raises OverflowError when the cell space does not fit in a signed
    64-bit key.
    """
    strides = np.ones(len(arities), dtype=np.int64)
    total = 1
    for k in range(len(arities) - 1, -1, -1):
        strides[k] = total
        if total > _INT64_MAX // int(arities[k]):
            raise OverflowError("cell space exceeds 64-bit keys; use a smaller subset")
        total *= int(arities[k])
    return strides


@dataclass(frozen=True)
class PartitionTable:
    """Sparse cell table of the partition defined by ``subset``.

    ``keys`` are packed mixed-radix cell keys (sorted); only non-empty cells
    are stored.  ``counts[j]`` and ``sums[j]`` are the size and response sum
    of cell ``keys[j]``.
    """

    subset: tuple
    arities: tuple
    keys: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    n: int
    y_bar: float

    @property
    def n_cells(self) -> int:
        return len(self.keys)

    def decode(self, key: int) -> tuple:
        out = []
        for a in reversed(self.arities):
            key, r = divmod(int(key), int(a))
            out.append(r)
        return tuple(reversed(out))

    @property
    def cells(self) -> dict:
        """Mapping cell tuple -> (count, response sum)."""
        return {self.decode(k): (int(c), float(w))
                for k, c, w in zip(self.keys, self.counts, self.sums)}

    def deviations(self) -> np.ndarray:
        return self.sums - self.counts * self.y_bar


def cell_keys(d: Dataset, subset) -> np.ndarray:
    """Packed cell key of every subject for the partition over ``subset``."""
    subset = _check_subset(d, subset)
    strides = radix_strides(d.arity[subset])
    keys = np.zeros(d.n, dtype=np.int64)
    for s, st in zip(subset, strides):
        keys += d.xt[s].astype(np.int64) * st
    return keys


def build_partition(d: Dataset, subset) -> PartitionTable:
    subset = _check_subset(d, subset)
    keys = cell_keys(d, subset)
    uniq, inv = np.unique(keys, return_inverse=True)
    counts = np.bincount(inv, minlength=len(uniq)).astype(np.int64)
    sums = np.bincount(inv, weights=d.y, minlength=len(uniq))
    return PartitionTable(tuple(subset), tuple(int(a) for a in d.arity[subset]),
                          uniq, counts, sums, d.n, float(d.y.mean()))


def influence_I(p: PartitionTable) -> float:
    a = p.deviations()
    return float(np.dot(a, a) / p.n)


def influence_J(p: PartitionTable) -> float:
    a = p.deviations()
    return float(np.sum(a * a / p.counts) / p.n)


def null_expectation_I(p: PartitionTable) -> float:
    """Null mean of I given the cell sizes, for a normalized response."""
    frac = p.counts / p.n
    return float(1.0 - np.dot(frac, frac))


def coarsen(p: PartitionTable, victim: int) -> PartitionTable:
    """Merge the categories of ``victim``, returning the coarser table.

    Works purely from the (count, sum) accumulators of ``p``.
    """
    if victim not in p.subset:
        raise ValueError(f"variable {victim} is not in subset {list(p.subset)}")
    pos = p.subset.index(victim)
    strides = radix_strides(p.arities)
    st, r = int(strides[pos]), p.arities[pos]
    coarse_keys = (p.keys // (st * r)) * st + p.keys % st
    uniq, inv = np.unique(coarse_keys, return_inverse=True)
    counts = np.bincount(inv, weights=p.counts, minlength=len(uniq)).round().astype(np.int64)
    sums = np.bincount(inv, weights=p.sums, minlength=len(uniq))
    keep = [k for k in range(len(p.subset)) if k != pos]
    return PartitionTable(tuple(p.subset[k] for k in keep), tuple(p.arities[k] for k in keep),
                          uniq, counts, sums, p.n, p.y_bar)


@dataclass(frozen=True)
class DropScore:
    """Half the loss in I when ``variable`` is removed from the partition."""

    variable: int
    d_value: float
    i_coarse: float
    i_fine: float


def _grouped_drop(p: PartitionTable, pos: int) -> float:
    # -1/(2n) * sum over coarse cells of [(sum a)^2 - sum a^2]; exactly 0 when
    # every coarse cell holds a single fine cell (inert victim)
    strides = radix_strides(p.arities)
    st, r = int(strides[pos]), p.arities[pos]
    a = p.deviations()
    coarse_keys = (p.keys // (st * r)) * st + p.keys % st
    _, inv = np.unique(coarse_keys, return_inverse=True)
    tot = np.bincount(inv, weights=a)
    sq = np.bincount(inv, weights=a * a)
    return float(-np.sum(tot * tot - sq) / (2.0 * p.n))


def drop_score(d: Dataset, subset, victim: int, fine: PartitionTable | None = None) -> DropScore:
    """Drop score of ``victim`` within ``subset``.

    For a one-variable subset the coarse partition is the single trivial
    cell, so ``i_coarse`` is 0.
    """
    subset = _check_subset(d, subset)
    victim = int(victim)
    if victim not in subset:
        raise ValueError(f"victim {victim} is not in subset {subset}")
    if fine is None:
        fine = build_partition(d, subset)
    i_fine = influence_I(fine)
    d_value = _grouped_drop(fine, fine.subset.index(victim))
    return DropScore(victim, d_value, i_fine - 2.0 * d_value, i_fine)


def drop_score_closed_form(d: Dataset, subset, victim: int) -> float:
    """Pairwise closed form of the drop score, evaluated cell by cell.

    ``-1/n * sum_i sum_{j<k} (W_ij - n_ij W/n)(W_ik - n_ik W/n)`` with ``i``
    over the cells of the partition without ``victim`` and ``j, k`` over the
    victim's categories.  Deliberately written as explicit loops over raw
    rows; used to cross-check :func:`drop_score`.
    """
    subset = _check_subset(d, subset)
    if victim not in subset:
        raise ValueError(f"victim {victim} is not in subset {subset}")
    rest = [s for s in subset if s != victim]
    n = d.n
    W = float(np.sum(d.y))
    r = int(d.arity[victim])
    acc: dict = {}
    for i in range(n):
        ci = tuple(int(d.x[i, s]) for s in rest)
        row = acc.get(ci)
        if row is None:
            row = acc[ci] = [[0, 0.0] for _ in range(r)]
        cell = row[int(d.x[i, victim])]
        cell[0] += 1
        cell[1] += float(d.y[i])
    total = 0.0
    for row in acc.values():
        dev = [w - (c / n) * W for c, w in row]
        for j in range(r):
            for k in range(j + 1, r):
                total += dev[j] * dev[k]
    return -total / n
