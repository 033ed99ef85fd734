"""Permutation null for screening and the empirical FDR threshold."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .ranking import RankingTable
from .screening import RetentionTally, ScreeningConfig, screen

_PERM_TAG = 0xFD12


def _perm_rng(seed: int, b: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_PERM_TAG, int(b)))
    return np.random.Generator(np.random.Philox(ss))


def permute_response(d: Dataset, seed: int, b: int = 0) -> Dataset:
    """Copy of ``d`` with y uniformly permuted; X is untouched."""
    perm = _perm_rng(seed, b).permutation(d.n)
    return d.with_y(d.y[perm])


def spiked_permutation(d: Dataset, qualified, seed: int, b: int = 0) -> Dataset:
    """Permute the rows of every non-qualified column relative to y.

    Qualified columns keep their alignment with the response; all other
    columns move together (preserving their mutual structure) to a random
    row order, destroying any relation with y.
    """
    qualified = sorted(set(int(q) for q in qualified))
    others = [s for s in range(d.S) if s not in set(qualified)]
    perm = _perm_rng(seed, b).permutation(d.n)
    x = d.x.astype(np.int64).copy()
    x[:, others] = x[perm][:, others]
    return Dataset(x, d.arity, d.y, d.y_model, d.names)


@dataclass(frozen=True)
class PermutationStudy:
    b: int
    observed_stats: np.ndarray
    null_stats: np.ndarray
    seed: int
    observed: RetentionTally | None = None


def run_permutation_study(d: Dataset, cfg: ScreeningConfig, b: int, seed: int,
                          workers: int | None = None) -> PermutationStudy:
    """Screen the observed data and ``b`` response-permuted copies.

    Every replicate reuses ``cfg`` (same subsets), so the null lists line up
    with the observed one element for element.
    """
    if b < 1:
        raise ValueError("need at least one permutation")
    observed = screen(d, cfg, workers)
    null = np.empty((b, cfg.n_s))
    for k in range(b):
        null[k] = screen(permute_response(d, seed, k + 1), cfg, workers).stopping_i
    return PermutationStudy(b, observed.stopping_i.copy(), null, seed, observed)


@dataclass(frozen=True)
class FdrCurve:
    """fdr(I) = median_b p0_b(I) / (M1(I) / n_s) over distinct observed I."""

    thresholds: np.ndarray
    m1: np.ndarray
    p0_median: np.ndarray
    fdr: np.ndarray
    n_s: int

    @property
    def fdr_capped(self) -> np.ndarray:
        return np.minimum(self.fdr, 1.0)

    def to_tsv(self) -> str:
        lines = ["threshold\tM1\tp0_median\tfdr\tfdr_capped"]
        for t, m1, p0, f, fc in zip(self.thresholds, self.m1, self.p0_median, self.fdr,
                                    self.fdr_capped):
            lines.append(f"{float(t)!r}\t{int(m1)}\t{float(p0)!r}\t{float(f)!r}\t{float(fc)!r}")
        return "\n".join(lines) + "\n"


def _exceed_counts(sorted_vals, thresholds):
    return len(sorted_vals) - np.searchsorted(sorted_vals, thresholds, side="left")


def fdr_curve(study: PermutationStudy) -> FdrCurve:
    obs = np.asarray(study.observed_stats, dtype=float)
    if obs.size == 0:
        raise ValueError("no observed statistics")
    n_s = obs.size
    thresholds = np.unique(obs)
    m1 = _exceed_counts(np.sort(obs), thresholds)
    null = np.atleast_2d(study.null_stats)
    p0 = np.vstack([_exceed_counts(np.sort(row), thresholds) / row.size for row in null])
    p0_med = np.median(p0, axis=0)
    keep = m1 > 0
    fdr = p0_med[keep] / (m1[keep] / n_s)
    return FdrCurve(thresholds[keep], m1[keep], p0_med[keep], fdr, n_s)


class NoThreshold(ValueError):
    pass


def threshold_at(curve: FdrCurve, alpha: float) -> float:
    """Smallest threshold whose estimated FDR is at most ``alpha``."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    ok = np.nonzero(curve.fdr <= alpha)[0]
    if ok.size == 0:
        raise NoThreshold(f"no threshold reaches fdr <= {alpha}")
    return float(curve.thresholds[ok[0]])


def select_variables(tally: RetentionTally, threshold: float) -> dict:
    """Union of retained sets whose stopping I reaches ``threshold``.

    Maps variable index -> number of qualifying subsets that retained it.
    """
    counts: dict = {}
    for stop, sub, keep in zip(tally.stopping_i, tally.subsets, tally.retained_mask):
        if stop >= threshold:
            for v in sub[keep].tolist():
                counts[v] = counts.get(v, 0) + 1
    return dict(sorted(counts.items()))


def rank_coverage_curve(ranking: RankingTable, qualified) -> list:
    """(number retained, fraction of qualified captured) at every rank cutoff.

    Variables with tied ranks enter together.
    """
    qualified = set(int(q) for q in qualified)
    if not qualified:
        raise ValueError("qualified set is empty")
    S = len(ranking)
    if any(not 0 <= q < S for q in qualified):
        raise ValueError("qualified set holds unknown variables")
    is_q = np.zeros(S, bool)
    is_q[list(qualified)] = True
    cutoffs = np.unique(ranking.ranks)
    order = np.argsort(ranking.ranks, kind="stable")
    sorted_ranks = ranking.ranks[order]
    cum_q = np.cumsum(is_q[order])
    ends = np.searchsorted(sorted_ranks, cutoffs, side="right")
    return [(int(e), float(cum_q[e - 1]) / len(qualified)) for e in ends]


def retained_needed(curve, fraction: float) -> int:
    """Smallest number retained at which the curve reaches ``fraction``."""
    for count, frac in curve:
        if frac >= fraction - 1e-12:
            return count
    raise ValueError(f"curve never reaches {fraction}")
