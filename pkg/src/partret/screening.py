"""Random-subset Partition Retention screening and resuscitation.

Subsets are drawn in fixed-size blocks; block ``k`` of a run seeded with
``seed`` always uses the Philox stream keyed by ``(seed, stream, k)``, so
subset ``i`` is the same however the eliminations are scheduled.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit

from .dataset import Dataset
from .elimination import StoppingRule, stopping_rule, ALL_D_POSITIVE
from .ranking import RankingTable, descending_ranks
from . import _kernels

BLOCK = 4096
DEFAULT_M = 7
DEFAULT_NS = 20_000
_SUBSET_TAG = 0x5EB5


class InfeasibleConfig(ValueError):
    """Screening parameters that cannot be satisfied by the dataset."""


@dataclass(frozen=True)
class ScreeningConfig:
    """Parameters of one screening run.

    ``strata`` is ``(list_vars, k_in)``: each subset takes ``k_in`` members
    from ``list_vars`` and ``m - k_in`` from the other variables.  ``stream``
    separates independent runs sharing a seed (e.g. resuscitation stages).
    """

    m: int = DEFAULT_M
    n_s: int = DEFAULT_NS
    seed: int = 0
    rule: StoppingRule = field(default_factory=lambda: stopping_rule(ALL_D_POSITIVE))
    strata: tuple | None = None
    stream: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise InfeasibleConfig("m must be >= 1")
        if self.n_s < 1:
            raise InfeasibleConfig("n_s must be >= 1")
        if self.strata is not None:
            lst, k_in = self.strata
            lst = tuple(sorted(int(v) for v in lst))
            if len(set(lst)) != len(lst):
                raise InfeasibleConfig("duplicate variables in stratum list")
            if not 0 <= k_in <= min(self.m, len(lst)):
                raise InfeasibleConfig(f"k_in={k_in} must lie in 0..min(m, |list|)")
            object.__setattr__(self, "strata", (lst, int(k_in)))

    def validate(self, S: int):
        if self.m > S:
            raise InfeasibleConfig(f"m={self.m} exceeds the number of variables S={S}")
        if self.strata is not None:
            lst, k_in = self.strata
            if any(not 0 <= v < S for v in lst):
                raise InfeasibleConfig("stratum list holds an out-of-range variable")
            if k_in > 0 and self.m - k_in > S - len(lst):
                raise InfeasibleConfig(f"need {self.m - k_in} variables outside the list but "
                                       f"only {S - len(lst)} exist")

    def to_dict(self) -> dict:
        out = {"m": self.m, "n_s": self.n_s, "seed": self.seed, "rule": self.rule.to_dict(),
               "stream": self.stream}
        if self.strata is not None:
            out["strata"] = {"list": list(self.strata[0]), "k_in": self.strata[1]}
        return out


@njit(cache=True)
def _floyd_rows(u, pool, out, col0):
    # Floyd's algorithm: uniform k-subset of pool from k uniforms per row
    B, k = u.shape
    N = pool.shape[0]
    chosen = np.empty(k, np.int64)
    for b in range(B):
        c = 0
        for j in range(N - k, N):
            t = int(u[b, j - (N - k)] * (j + 1))
            if t > j:
                t = j
            dup = False
            for q in range(c):
                if chosen[q] == t:
                    dup = True
                    break
            chosen[c] = j if dup else t
            c += 1
        for q in range(k):
            out[b, col0 + q] = pool[chosen[q]]


def _block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_SUBSET_TAG, int(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def draw_subsets(S: int, cfg: ScreeningConfig, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Subsets ``start..stop-1`` of the run, each sorted, shape (count, m)."""
    cfg.validate(S)
    stop = cfg.n_s if stop is None else stop
    m = cfg.m
    if cfg.strata is not None and cfg.strata[1] > 0:
        lst, k_in = cfg.strata
        inside = np.array(lst, dtype=np.int64)
        mask = np.ones(S, bool)
        mask[inside] = False
        outside = np.nonzero(mask)[0].astype(np.int64)
        parts = [(inside, k_in), (outside, m - k_in)]
    else:
        parts = [(np.arange(S, dtype=np.int64), m)]
    chunks = []
    for blk in range(start // BLOCK, (stop - 1) // BLOCK + 1):
        rng = _block_rng(cfg.seed, cfg.stream, blk)
        lo = blk * BLOCK
        rows = min(BLOCK, cfg.n_s - lo)
        out = np.empty((rows, m), np.int64)
        col = 0
        for pool, k in parts:
            u = rng.random((rows, k))
            if k:
                _floyd_rows(u, pool, out, col)
            col += k
        out.sort(axis=1)
        chunks.append(out[max(start - lo, 0):stop - lo])
    return np.concatenate(chunks, axis=0)


@contextlib.contextmanager
def worker_threads(workers: int | None):
    """Bound the numba thread pool for the duration of a block."""
    if workers is None:
        yield
        return
    old = numba.get_num_threads()
    numba.set_num_threads(max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS)))
    try:
        yield
    finally:
        numba.set_num_threads(old)


@dataclass(frozen=True)
class RetentionTally:
    """Per-variable sampling and retention counts plus per-subset records."""

    sampled_count: np.ndarray
    retained_count: np.ndarray
    stopping_i: np.ndarray
    subsets: np.ndarray
    retained_mask: np.ndarray
    stop_reasons: np.ndarray
    names: tuple = ()
    config: ScreeningConfig | None = None

    @property
    def n_s(self) -> int:
        return len(self.stopping_i)

    def retained_sets(self):
        for sub, keep in zip(self.subsets, self.retained_mask):
            yield tuple(sub[keep].tolist())


def eliminate_subsets(d: Dataset, subsets: np.ndarray, rule: StoppingRule, workers=None):
    """Run the compiled elimination on each row of ``subsets``."""
    subsets = np.ascontiguousarray(subsets, dtype=np.int64)
    B, m = subsets.shape
    keep = np.zeros((B, m), dtype=np.bool_)
    stop_i = np.empty(B)
    reasons = np.empty(B, np.int64)
    ndrops = np.empty(B, np.int64)
    with worker_threads(workers):
        _kernels.eliminate_batch(d.xt, d.arity, d.y, float(d.y.mean()), subsets,
                                 rule.as_array(), keep, stop_i, reasons, ndrops)
    return keep, stop_i, reasons


def screen(d: Dataset, cfg: ScreeningConfig, workers: int | None = None) -> RetentionTally:
    """Draw ``cfg.n_s`` subsets, eliminate each, and tally retentions."""
    cfg.validate(d.S)
    subsets = draw_subsets(d.S, cfg)
    keep, stop_i, reasons = eliminate_subsets(d, subsets, cfg.rule, workers)
    sampled = np.bincount(subsets.ravel(), minlength=d.S)
    retained = np.bincount(subsets[keep], minlength=d.S)
    return RetentionTally(sampled, retained, stop_i, subsets, keep, reasons, d.names, cfg)


RAW_COUNT = "raw_count"
RATE = "rate"


def retention_rates(t: RetentionTally) -> np.ndarray:
    sampled = t.sampled_count.astype(float)
    return np.divide(t.retained_count, sampled, out=np.zeros_like(sampled), where=sampled > 0)


def rank_by_retention(t: RetentionTally, mode: str = RAW_COUNT) -> RankingTable:
    rate = retention_rates(t)
    if mode == RAW_COUNT:
        scores = t.retained_count.astype(float)
    elif mode == RATE:
        scores = rate
    else:
        raise ValueError(f"unknown retention ranking mode {mode!r}")
    extra = {"sampled": t.sampled_count, "retained": t.retained_count, "rate": rate}
    return RankingTable.from_scores(f"retention_{mode}", scores, t.names, extra=extra)


def stage_ranking(t: RetentionTally, list_vars, label: str) -> RankingTable:
    """List members first (by retention rate), then the rest by raw count."""
    S = len(t.sampled_count)
    rate = retention_rates(t)
    in_list = np.zeros(S, bool)
    in_list[list(list_vars)] = True
    L = int(in_list.sum())
    ranks = np.empty(S)
    scores = np.where(in_list, rate, t.retained_count.astype(float))
    ranks[in_list] = descending_ranks(rate[in_list])
    if L < S:
        ranks[~in_list] = L + descending_ranks(t.retained_count[~in_list])
    extra = {"in_list": in_list.astype(int), "sampled": t.sampled_count,
             "retained": t.retained_count, "rate": rate}
    return RankingTable(label, scores, ranks, t.names, extra=extra)


DEFAULT_STAGES = ((10, 3, 100_000), (15, 3, 100_000))


def resuscitate(d: Dataset, initial_ranking: RankingTable, stage_plan=DEFAULT_STAGES,
                m: int = DEFAULT_M, seed: int = 0, rule: StoppingRule | None = None,
                workers: int | None = None) -> list:
    """Stratified re-screening seeded by the top of the previous ranking.

    Returns one ranking per stage (``ud1``, ``ud2``, ...).
    """
    if rule is None:
        rule = stopping_rule(ALL_D_POSITIVE)
    if len(initial_ranking) != d.S:
        raise ValueError("initial ranking does not cover every variable")
    prev = initial_ranking
    out = []
    for t, (L, k_in, n_s) in enumerate(stage_plan):
        if not 1 <= L <= d.S:
            raise InfeasibleConfig(f"stage {t + 1}: list size {L} outside 1..{d.S}")
        lst = prev.top(L).tolist()
        if k_in == 0:
            cfg = ScreeningConfig(m, n_s, seed, rule, None, stream=t + 1)
        else:
            cfg = ScreeningConfig(m, n_s, seed, rule, (lst, k_in), stream=t + 1)
        tally = screen(d, cfg, workers)
        prev = stage_ranking(tally, lst, f"ud{t + 1}")
        out.append(prev)
    return out
