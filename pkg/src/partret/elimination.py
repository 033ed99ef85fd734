"""Backward elimination of a variable subset guided by drop scores."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .influence import DropScore, build_partition, drop_score, influence_I, _check_subset
from ._kernels import TIE_RTOL

ALL_D_POSITIVE = "all_d_positive"
D_EXCEEDS = "d_exceeds"
D_EXCEEDS_SCHEDULE = "d_exceeds_schedule"

STOP_ALL_D_POSITIVE = "all_d_positive"
STOP_SINGLE = "single_variable_left"
STOP_THRESHOLD = "threshold_rule"


@dataclass(frozen=True)
class StoppingRule:
    """Fires when every drop score exceeds the threshold for the current step.

    ``thresholds[t]`` applies after ``t`` variables have been dropped; the
    last entry is reused for later steps.  Comparison is strict, so
    ``all_d_positive`` does not fire on zero scores.
    """

    kind: str
    thresholds: tuple = (0.0,)

    def threshold(self, step: int) -> float:
        return self.thresholds[min(step, len(self.thresholds) - 1)]

    def fires(self, d_values, step: int = 0) -> bool:
        c = self.threshold(step)
        return all(dv > c for dv in d_values)

    @property
    def stop_tag(self) -> str:
        return STOP_ALL_D_POSITIVE if self.kind == ALL_D_POSITIVE else STOP_THRESHOLD

    def as_array(self) -> np.ndarray:
        return np.asarray(self.thresholds, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "thresholds": list(self.thresholds)}


def stopping_rule(kind: str, params=None) -> StoppingRule:
    """Build a rule: ``all_d_positive``, ``d_exceeds`` (c) or
    ``d_exceeds_schedule`` (one c per step)."""
    if kind == ALL_D_POSITIVE:
        return StoppingRule(ALL_D_POSITIVE, (0.0,))
    if kind == D_EXCEEDS:
        if params is None:
            raise ValueError("d_exceeds needs a threshold")
        c = float(params[0] if isinstance(params, (list, tuple)) else params)
        return StoppingRule(D_EXCEEDS, (c,))
    if kind == D_EXCEEDS_SCHEDULE:
        cs = tuple(float(c) for c in (params or ()))
        if not cs:
            raise ValueError("d_exceeds_schedule needs at least one threshold")
        return StoppingRule(D_EXCEEDS_SCHEDULE, cs)
    raise ValueError(f"unknown stopping rule {kind!r}")


@dataclass(frozen=True)
class EliminationStep:
    i_before: float
    drop_scores: tuple
    dropped: int


@dataclass(frozen=True)
class EliminationTrace:
    steps: tuple
    retained: tuple
    stopping_i: float
    stop_reason: str
    final_scores: tuple = field(default=())

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        label = (lambda v: names[v]) if names is not None else (lambda v: v)
        return {
            "steps": [{
                "i_before": s.i_before,
                "drop_scores": [{"variable": label(ds.variable), "d": ds.d_value,
                                 "i_coarse": ds.i_coarse, "i_fine": ds.i_fine}
                                for ds in s.drop_scores],
                "dropped": label(s.dropped)} for s in self.steps],
            "retained": [label(v) for v in self.retained],
            "stopping_i": self.stopping_i,
            "stop_reason": self.stop_reason,
            "final_scores": [{"variable": label(ds.variable), "d": ds.d_value}
                             for ds in self.final_scores],
        }

    def to_json(self, names=None) -> str:
        return json.dumps(self.to_dict(names))


def _argmin_lowest(scores, i_fine):
    dmin = min(s.d_value for s in scores)
    tol = TIE_RTOL * (1.0 + abs(i_fine))
    return min(s.variable for s in scores if s.d_value <= dmin + tol)


def eliminate(d: Dataset, subset, rule: StoppingRule | None = None) -> EliminationTrace:
    """Drop the variable with the smallest drop score until the rule fires
    or one variable is left.

    Ties at the minimum go to the lowest variable index.
    """
    if rule is None:
        rule = stopping_rule(ALL_D_POSITIVE)
    remaining = sorted(_check_subset(d, subset))
    steps = []
    while True:
        fine = build_partition(d, remaining)
        i_now = influence_I(fine)
        if len(remaining) == 1:
            return EliminationTrace(tuple(steps), tuple(remaining), i_now, STOP_SINGLE)
        scores = tuple(drop_score(d, remaining, v, fine=fine) for v in remaining)
        if rule.fires([s.d_value for s in scores], len(steps)):
            return EliminationTrace(tuple(steps), tuple(remaining), i_now, rule.stop_tag, scores)
        victim = _argmin_lowest(scores, i_now)
        steps.append(EliminationStep(i_now, scores, victim))
        remaining.remove(victim)
