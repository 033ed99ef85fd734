"""First- and second-order rankings: |t|, I1, chi-square and pair scans."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .influence import _check_subset
from .ranking import RankingTable, descending_ranks
from . import _kernels

# |t| reported when the within-group variance is zero but the means differ
T_SENTINEL = 1e300
# a response with at most this many distinct values counts as class labels
MAX_LABELS = 10


class DegenerateStatistic(UserWarning):
    pass


def _binary_groups(d: Dataset, var: int):
    if d.arity[var] != 2:
        raise ValueError(f"t statistic needs a binary variable; {d.names[var]!r} "
                         f"has arity {d.arity[var]} (use i1 or chi_square)")
    col = d.xt[var]
    g0, g1 = d.y[col == 0], d.y[col == 1]
    if len(g0) == 0 or len(g1) == 0:
        raise ValueError(f"variable {d.names[var]!r} leaves a group empty")
    return g0, g1


def t_statistic(d: Dataset, var: int) -> float:
    """Absolute pooled-variance two-sample t of y split by a binary variable."""
    g0, g1 = _binary_groups(d, var)
    diff = abs(g1.mean() - g0.mean())
    ss = np.sum((g0 - g0.mean()) ** 2) + np.sum((g1 - g1.mean()) ** 2)
    df = len(g0) + len(g1) - 2
    if diff == 0.0:
        return 0.0
    if df <= 0 or ss <= 1e-24 * max(1.0, float(np.dot(d.y, d.y))):
        warnings.warn(f"zero within-group variance for {d.names[var]!r}; "
                      f"|t| reported as {T_SENTINEL:g}", DegenerateStatistic, stacklevel=2)
        return T_SENTINEL
    se = math.sqrt(ss / df * (1.0 / len(g0) + 1.0 / len(g1)))
    return float(diff / se)


def _category_sums(d: Dataset, var: int):
    r = int(d.arity[var])
    col = d.xt[var]
    return np.bincount(col, minlength=r).astype(float), np.bincount(col, weights=d.y, minlength=r)


def i1(d: Dataset, var: int) -> float:
    """I of the single-variable partition."""
    cnt, W = _category_sums(d, var)
    a = W - cnt * d.y.mean()
    return float(np.dot(a, a) / d.n)


def i1_all(d: Dataset) -> np.ndarray:
    return np.array([i1(d, s) for s in range(d.S)])


def t_all(d: Dataset) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateStatistic)
        return np.array([t_statistic(d, s) for s in range(d.S)])


def response_labels(d: Dataset) -> np.ndarray:
    """Integer label codes of a discrete response; ValueError if continuous."""
    labels, codes = np.unique(d.y, return_inverse=True)
    if len(labels) > MAX_LABELS or (len(labels) == d.n and d.n > MAX_LABELS):
        raise ValueError("chi-square needs a discrete (labelled) response; "
                         f"y has {len(labels)} distinct values")
    return codes.reshape(-1)


def chi_square_table(table) -> float:
    """Pearson chi-square of a contingency table.

    Cells with zero expected count (an empty row or column) are skipped with
    a warning.
    """
    t = np.asarray(table, dtype=float)
    total = t.sum()
    if total <= 0:
        return 0.0
    expected = np.outer(t.sum(axis=1), t.sum(axis=0)) / total
    ok = expected > 0
    if not ok.all():
        warnings.warn(f"{int((~ok).sum())} cells with zero expected count excluded",
                      DegenerateStatistic, stacklevel=2)
    return float(np.sum((t[ok] - expected[ok]) ** 2 / expected[ok]))


def chi_square(d: Dataset, var: int) -> float:
    codes = response_labels(d)
    r = int(d.arity[var])
    table = np.zeros((r, codes.max() + 1))
    np.add.at(table, (d.xt[var], codes), 1.0)
    return chi_square_table(table)


def chi_square_all(d: Dataset) -> np.ndarray:
    codes = response_labels(d)
    out = np.empty(d.S)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateStatistic)
        for s in range(d.S):
            table = np.zeros((int(d.arity[s]), codes.max() + 1))
            np.add.at(table, (d.xt[s], codes), 1.0)
            out[s] = chi_square_table(table)
    return out


MARGINAL_METHODS = ("t", "i1", "chi2")


def marginal_ranking(d: Dataset, method: str) -> RankingTable:
    if method == "t":
        scores = t_all(d)
    elif method == "i1":
        scores = i1_all(d)
    elif method == "chi2":
        scores = chi_square_all(d)
    else:
        raise ValueError(f"unknown marginal method {method!r}")
    return RankingTable.from_scores(method, scores, d.names)


@dataclass(frozen=True)
class PairList:
    """All scanned pairs sorted by descending I (ties by (a, b)).

    ``i1`` carries the single-variable I of every variable; it orders two
    variables that first appear together in the same pair.
    """

    a: np.ndarray
    b: np.ndarray
    values: np.ndarray
    S: int
    i1: np.ndarray
    names: tuple = ()

    def __len__(self):
        return len(self.values)

    def top(self, k: int):
        return list(zip(self.a[:k].tolist(), self.b[:k].tolist(), self.values[:k].tolist()))

    def to_tsv(self, k: int | None = None) -> str:
        k = len(self) if k is None else min(k, len(self))
        lines = ["var_a\tvar_b\tI"]
        for a, b, v in self.top(k):
            lines.append(f"{self.names[a]}\t{self.names[b]}\t{v!r}")
        return "\n".join(lines) + "\n"


def pair_values(d: Dataset, vars_=None):
    """I for every unordered pair of ``vars_`` (default: all variables).

    Returns (a, b, values) in row-major pair order over the sorted variable
    list.
    """
    vars_ = np.arange(d.S) if vars_ is None else np.array(sorted(_check_subset(d, vars_)))
    V = len(vars_)
    if V < 2:
        raise ValueError("pair scan needs at least two variables")
    out = np.empty(V * (V - 1) // 2)
    _kernels.pair_scan_kernel(d.xt, d.arity, d.y, float(d.y.mean()),
                              vars_.astype(np.int64), out)
    ia, ib = np.triu_indices(V, k=1)
    return vars_[ia], vars_[ib], out


def pair_scan(d: Dataset, vars_=None) -> PairList:
    a, b, vals = pair_values(d, vars_)
    order = np.lexsort((b, a, -vals))
    return PairList(a[order], b[order], vals[order], d.S, i1_all(d), d.names)


def rank_i2_first_appearance(pairs: PairList) -> RankingTable:
    """Rank variables by when they first show up in the sorted pair list.

    A variable's rank is the number of distinct variables seen before its
    first pair plus its position within that pair; two newcomers in one pair
    are ordered by I1.  Variables that never appear share the remaining
    ranks.
    """
    if len(pairs) == 0:
        raise ValueError("empty pair list")
    S = pairs.S
    ranks = np.full(S, np.nan)
    seen = 0
    for a, b in zip(pairs.a.tolist(), pairs.b.tolist()):
        new = [v for v in (a, b) if np.isnan(ranks[v])]
        if len(new) == 2:
            new.sort(key=lambda v: (-pairs.i1[v], v))
        for v in new:
            seen += 1
            ranks[v] = seen
        if seen == S:
            break
    missing = np.isnan(ranks)
    if missing.any():
        ranks[missing] = (seen + 1 + S) / 2.0
    return RankingTable("i2", -ranks, ranks, pairs.names, pair_list=pairs)


def default_n_r(n_pairs: int) -> int:
    return max(1, int(round(0.01 * n_pairs)))


def rank_i2f(pairs: PairList, n_r: int | None = None) -> RankingTable:
    """Rank variables by how often they appear in the ``n_r`` top pairs."""
    if n_r is None:
        n_r = default_n_r(len(pairs))
    if not 1 <= n_r <= len(pairs):
        raise ValueError(f"n_r must be in 1..{len(pairs)}, got {n_r}")
    counts = np.bincount(pairs.a[:n_r], minlength=pairs.S) + \
        np.bincount(pairs.b[:n_r], minlength=pairs.S)
    return RankingTable("i2f", counts.astype(float), descending_ranks(counts), pairs.names,
                        pair_list=pairs, extra={"appearances": counts})
