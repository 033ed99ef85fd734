"""Seeded generators for the five synthetic examples.

All draws come from ``numpy.random.Generator(Philox(seed))``, so a dataset
is a pure function of its parameters and seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, RANDOM_Y, SPECIFIED_Y, normalize_response

EXAMPLE1_PROBS = (0.7, 0.7, 0.5, 0.5, 0.5, 0.5)
EXAMPLE5_PROBS = (0.4, 0.5, 0.6, 0.35, 0.45, 0.55, 0.65)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _bernoulli(rng, n, probs):
    probs = np.asarray(probs, dtype=float)
    return (rng.random((n, len(probs))) < probs[None, :]).astype(np.int64)


def gen_example1(n: int = 200, seed: int = 0, normalize: bool = True) -> Dataset:
    """Six Bernoulli columns, y ~ N(X1*X2, 1)."""
    rng = make_rng(seed)
    x = _bernoulli(rng, n, EXAMPLE1_PROBS)
    y = x[:, 0] * x[:, 1] + rng.standard_normal(n)
    d = Dataset(x, np.full(6, 2), y, RANDOM_Y)
    return normalize_response(d) if normalize else d


def gen_example2(n: int, probs=(0.5, 0.5, 0.5), seed: int = 0) -> Dataset:
    """Three independent Bernoulli columns and the raw response y = X1*X2."""
    if len(probs) != 3:
        raise ValueError("example 2 needs three Bernoulli parameters")
    rng = make_rng(seed)
    x = _bernoulli(rng, n, probs)
    y = (x[:, 0] * x[:, 1]).astype(float)
    return Dataset(x, np.full(3, 2), y, SPECIFIED_Y)


def gen_example3(n: int, q0: float = 0.25, q1: float = 0.25, seed: int = 0,
                 n_noise: int = 0, noise_p: float = 0.5) -> Dataset:
    """(X1, X2) from cells (1,1),(1,0),(0,1),(0,0) with probabilities
    q1, q0, q0, q1 and raw response y = X1*X2 + (1-X1)(1-X2).

    ``n_noise`` independent Bernoulli(noise_p) columns are appended.
    """
    if q0 <= 0 or q1 <= 0 or abs(2 * q0 + 2 * q1 - 1) > 1e-12:
        raise ValueError("need positive q0, q1 with 2*q0 + 2*q1 = 1")
    rng = make_rng(seed)
    cell = rng.choice(4, size=n, p=[q1, q0, q0, q1])
    x1 = (cell <= 1).astype(np.int64)
    x2 = (cell % 2 == 0).astype(np.int64)
    cols = [x1, x2]
    if n_noise:
        cols.extend(_bernoulli(rng, n, np.full(n_noise, noise_p)).T)
    x = np.column_stack(cols)
    y = (x1 * x2 + (1 - x1) * (1 - x2)).astype(float)
    return Dataset(x, np.full(x.shape[1], 2), y, SPECIFIED_Y)


def example4_mean(R):
    R = np.asarray(R)
    return 4 * (R * (R - 1) + (10 - R) * (9 - R))


def gen_example4(n: int = 400, seed: int = 0, S: int = 500, normalize: bool = True) -> Dataset:
    """Ten exchangeable influential columns with R ones per row, R ~ U{1..9};
    y | R ~ N(mu_R, mu_R) with mu_R = 4(R(R-1) + (10-R)(9-R))."""
    rng = make_rng(seed)
    noise_p = rng.uniform(0.4, 0.6, size=S - 10)
    R = rng.integers(1, 10, size=n)
    # rank of uniform keys picks a uniformly random R-subset of the ten
    keys = rng.random((n, 10))
    order = np.argsort(keys, axis=1)
    infl = np.zeros((n, 10), dtype=np.int64)
    rows = np.arange(n)[:, None]
    infl[rows, order] = (np.arange(10)[None, :] < R[:, None]).astype(np.int64)
    noise = _bernoulli(rng, n, noise_p)
    x = np.hstack([infl, noise])
    mu = example4_mean(R).astype(float)
    y = mu + np.sqrt(mu) * rng.standard_normal(n)
    d = Dataset(x, np.full(S, 2), y, RANDOM_Y)
    return normalize_response(d) if normalize else d


def example5_moments(x, mu0: float):
    """Mean and standard deviation of y for rows of the first seven columns."""
    x = np.asarray(x)
    g1 = x[:, 0] * x[:, 1] * x[:, 2]
    g2 = x[:, 3] * x[:, 4] * x[:, 5] * x[:, 6]
    mu1 = mu0 * g1
    mu2 = 1.5 * mu0 * g2
    mu = np.maximum(mu1, mu2) + 0.1 * (mu1 + mu2)
    sigma = np.maximum(1.0 + g1, 1.0 + 2.0 * g2)
    return mu, sigma


def gen_example5(n: int = 400, mu0: float = 4.0, seed: int = 0, S: int = 1000,
                 normalize: bool = True) -> Dataset:
    """Two interacting groups (X1-X3, X4-X7) among S binary columns."""
    if mu0 <= 0:
        raise ValueError("mu0 must be positive")
    rng = make_rng(seed)
    noise_p = rng.uniform(0.4, 0.6, size=S - 7)
    x = _bernoulli(rng, n, np.concatenate([EXAMPLE5_PROBS, noise_p]))
    mu, sigma = example5_moments(x, mu0)
    y = mu + sigma * rng.standard_normal(n)
    d = Dataset(x, np.full(S, 2), y, RANDOM_Y)
    return normalize_response(d) if normalize else d


EXAMPLES = ("ex1", "ex2", "ex3", "ex4", "ex5")


@dataclass(frozen=True)
class ExampleSpec:
    example: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}; choose from {EXAMPLES}")
        if self.n < 1:
            raise ValueError("n must be >= 1")


def generate(spec: ExampleSpec) -> Dataset:
    p = dict(spec.params)
    if spec.example == "ex1":
        return gen_example1(spec.n, spec.seed, **p)
    if spec.example == "ex2":
        return gen_example2(spec.n, seed=spec.seed, **p)
    if spec.example == "ex3":
        return gen_example3(spec.n, seed=spec.seed, **p)
    if spec.example == "ex4":
        return gen_example4(spec.n, spec.seed, **p)
    return gen_example5(spec.n, seed=spec.seed, **p)
