"""Vector plumbing: the oracle contract, call counting, and seeded randomness.

Vectors are plain 1-D float64 numpy arrays.  A problem is anything with a
``dim`` attribute and an ``eval(x) -> (value, subgradient)`` method whose
subgradient selection is deterministic.  All randomness flows through
:class:`RngStream`, which derives independent, reproducible substreams from
a single 64-bit seed via counter-based (Philox) generators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]


class Problem(Protocol):
    dim: int

    def eval(self, x: Vector) -> tuple[float, Vector]:
        ...


def as_vector(x) -> Vector:
    """Coerce to a finite 1-D float64 array."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    return v


@dataclass(frozen=True)
class OracleSample:
    """One first-order oracle answer: f(point) and one Clarke subgradient."""

    point: Vector
    value: float
    subgradient: Vector


class CountingOracle:
    """Wraps a problem and counts point queries.

    One query returns value and subgradient together and costs exactly one
    call; the counter never decreases.  The best value (and where it was
    seen) is tracked across every query, probes included, since that is the
    quantity the experiment traces report.  An optional ``on_query`` hook
    fires after each query (used for trace checkpointing).
    """

    def __init__(self, problem: Problem,
                 on_query: Callable[["CountingOracle"], None] | None = None):
        self.problem = problem
        self.point_queries = 0
        self.best_value = np.inf
        self.best_point: Vector | None = None
        self.last_value = np.nan
        self.on_query = on_query

    def query(self, x: Vector) -> OracleSample:
        x = as_vector(x)
        if x.shape[0] != self.problem.dim:
            raise ValueError(
                f"dimension mismatch: point has {x.shape[0]}, "
                f"problem has {self.problem.dim}")
        value, subgradient = self.problem.eval(x)
        value = float(value)
        subgradient = np.asarray(subgradient, dtype=np.float64)
        if subgradient.shape != x.shape:
            raise ValueError("problem returned a subgradient of wrong dimension")
        self.point_queries += 1
        self.last_value = value
        if value < self.best_value:
            self.best_value = value
            self.best_point = x.copy()
        if self.on_query is not None:
            self.on_query(self)
        return OracleSample(point=x, value=value, subgradient=subgradient)


@dataclass
class RngStream:
    """Deterministic random stream with derivable, non-overlapping substreams.

    Built on Philox (counter based), so identical seeds give identical draw
    sequences across platforms.  ``substream(*path)`` derives an independent
    stream keyed by an integer path, e.g. per (outer iteration, grid index).
    """

    seed: int
    path: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def substream(self, *path: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(path))

    def normal(self, size: int) -> Vector:
        return self._gen.normal(size=size)

    def uniform(self) -> float:
        return float(self._gen.uniform())


def uniform_ball(rng: RngStream, center: Vector, radius: float) -> Vector:
    """Uniform draw from the closed ball of given radius around center.

    Gaussian direction normalized to the sphere, scaled by radius * U^(1/d).
    """
    if not radius > 0:
        raise ValueError(f"ball radius must be positive, got {radius}")
    d = center.shape[0]
    direction = rng.normal(d)
    norm = np.linalg.norm(direction)
    assert norm > 0.0, "degenerate Gaussian direction draw"
    r = radius * rng.uniform() ** (1.0 / d)
    return center + (r / norm) * direction


def uniform_segment(rng: RngStream, a: Vector, b: Vector) -> Vector:
    """Uniform draw from the segment [a, b]."""
    if a.shape != b.shape:
        raise ValueError("segment endpoints have different dimensions")
    t = rng.uniform()
    return a + t * (b - a)
