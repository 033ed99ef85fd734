"""Per-variable ranking tables shared by every scoring method."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata


def descending_ranks(scores) -> np.ndarray:
    """1-based ranks, largest score first, ties share the mean rank."""
    return rankdata(-np.asarray(scores, dtype=float), method="average")


@dataclass(frozen=True)
class RankingTable:
    """Scores and ranks of all S variables under one method.

    ``extra`` holds method-specific columns (e.g. sampled / retained counts)
    keyed by column name, each an array of length S.
    """

    method: str
    scores: np.ndarray
    ranks: np.ndarray
    names: tuple = ()
    pair_list: object = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        ranks = np.asarray(self.ranks, dtype=float)
        if scores.shape != ranks.shape or scores.ndim != 1:
            raise ValueError("scores and ranks must be 1-d arrays of equal length")
        names = tuple(self.names) if self.names else tuple(f"X{s + 1}" for s in range(len(scores)))
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_scores(cls, method, scores, names=(), **kw) -> "RankingTable":
        return cls(method, scores, descending_ranks(scores), names, **kw)

    def __len__(self):
        return len(self.scores)

    def order(self) -> np.ndarray:
        """Variable indices from best to worst (ties by index)."""
        return np.lexsort((np.arange(len(self.ranks)), self.ranks))

    def top(self, k: int) -> np.ndarray:
        return self.order()[:k]

    def rank_of(self, var: int) -> float:
        return float(self.ranks[var])

    def to_tsv(self, columns=None) -> str:
        cols = list(self.extra) if columns is None else list(columns)
        lines = ["\t".join(["variable", *cols, "score", "rank"])]
        for v in self.order():
            extra = [_fmt(self.extra[c][v]) for c in cols]
            lines.append("\t".join([self.names[v], *extra, _fmt(self.scores[v]),
                                    _fmt(self.ranks[v])]))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def read_ranking_tsv(path, method: str = "file") -> RankingTable:
    """Read a ``variable ... score rank`` TSV (comment lines start with #)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    header = lines[0].split("\t")
    try:
        iv, isc, irk = header.index("variable"), header.index("score"), header.index("rank")
    except ValueError:
        raise ValueError(f"{path}: ranking TSV needs variable, score and rank columns") from None
    names, scores, ranks = [], [], []
    for ln in lines[1:]:
        f = ln.split("\t")
        names.append(f[iv])
        scores.append(float(f[isc]))
        ranks.append(float(f[irk]))
    return RankingTable(method, scores, ranks, tuple(names))
