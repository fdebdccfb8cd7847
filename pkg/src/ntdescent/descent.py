"""Inner loops: segment minimal-norm updates driving two descent searches.

Both loops take an anchor x with cached value f_x, a starting vector g that
is a convex combination of subgradients from the sigma-ball around x, and
shrink its norm by repeated projection onto segments [g_t, ghat_t] until the
normalized step x - sigma * g_t/|g_t| achieves sufficient decrease
f_x - f(step) > (sigma/8) |g_t|, the vector hits zero, or the budget T runs
out.  The tangent loop probes deterministically at the step point; the
normal loop additionally samples a random nearby subgradient.

When a certificate list is threaded through, each loop maintains the convex
combination (weight, point) pairs that reproduce g_t from subgradients at
points inside the closed sigma-ball, for verification in tests.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import CountingOracle, RngStream, Vector, uniform_ball, uniform_segment

#: slack for the nonincreasing-norm assertion (floating point only)
_NORM_SLACK = 1e-12

Certificate = list[tuple[float, Vector]]


class Status(enum.Enum):
    DESCENT_ACHIEVED = "descent_achieved"
    BUDGET_EXHAUSTED = "budget_exhausted"
    ZERO_GRADIENT = "zero_gradient"


@dataclass
class LoopResult:
    g: Vector
    status: Status
    inner_iterations: int
    certificate: Certificate | None = None


def segment_min_norm(a: Vector, b: Vector) -> Vector:
    """Minimal-norm point of the segment [a, b]."""
    v, lam = _segment_min_norm_step(a, b)
    return v


def _segment_min_norm_step(a: Vector, b: Vector) -> tuple[Vector, float]:
    """Minimal-norm point of [a, b] and the mixing weight lambda on b."""
    d = b - a
    den = float(d @ d)
    if den == 0.0:
        return a.copy(), 0.0
    lam = min(1.0, max(0.0, -float(a @ d) / den))
    return a + lam * d, lam


def _mix_certificate(cert: Certificate | None, lam: float,
                     point: Vector) -> Certificate | None:
    if cert is None:
        return None
    mixed = [((1.0 - lam) * w, p) for (w, p) in cert]
    mixed.append((lam, point.copy()))
    return mixed


def tdescent(oracle: CountingOracle, x: Vector, g: Vector, sigma: float,
             T: int, f_x: float,
             certificate: Certificate | None = None) -> LoopResult:
    """Deterministic inner loop probing at the normalized step point.

    One oracle call per iteration: the probe provides both the decrease test
    and the next subgradient.  T = 0 returns g untouched with zero calls.
    """
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    g_t = np.asarray(g, dtype=np.float64)
    t = 0
    while T - 1 >= t:
        n = float(np.linalg.norm(g_t))
        if n == 0.0:
            return LoopResult(g_t, Status.ZERO_GRADIENT, t, certificate)
        probe = x - (sigma / n) * g_t
        sample = oracle.query(probe)
        if f_x - sample.value > (sigma / 8.0) * n:
            return LoopResult(g_t, Status.DESCENT_ACHIEVED, t, certificate)
        g_next, lam = _segment_min_norm_step(g_t, sample.subgradient)
        assert np.linalg.norm(g_next) <= n + _NORM_SLACK * max(1.0, n)
        certificate = _mix_certificate(certificate, lam, probe)
        g_t = g_next
        t += 1
    return LoopResult(g_t, Status.BUDGET_EXHAUSTED, t, certificate)


def ndescent(oracle: CountingOracle, x: Vector, g: Vector, sigma: float,
             T: int, f_x: float, rng: RngStream,
             certificate: Certificate | None = None) -> LoopResult:
    """Randomized inner loop sampling subgradients along perturbed rays.

    Each iteration perturbs g_t inside a ball of radius sigma*|g_t|/2, picks
    a uniform point on the segment from x toward the perturbed direction,
    and mixes in the subgradient found there.  Two oracle calls per
    iteration: the decrease probe and the segment sample.  The rng stream is
    dedicated to this invocation.
    """
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    g_t = np.asarray(g, dtype=np.float64)
    t = 0
    while T - 1 >= t:
        n = float(np.linalg.norm(g_t))
        if n == 0.0:
            return LoopResult(g_t, Status.ZERO_GRADIENT, t, certificate)
        probe = x - (sigma / n) * g_t
        sample = oracle.query(probe)
        if f_x - sample.value > (sigma / 8.0) * n:
            return LoopResult(g_t, Status.DESCENT_ACHIEVED, t, certificate)
        # radius strictly below sigma*|g_t| keeps zeta away from the origin
        zeta = uniform_ball(rng, g_t, 0.5 * sigma * n)
        zn = float(np.linalg.norm(zeta))
        assert zn > 0.0, "perturbed direction cannot vanish for r < sigma*|g|"
        y = uniform_segment(rng, x, x - (sigma / zn) * zeta)
        sample_y = oracle.query(y)
        g_next, lam = _segment_min_norm_step(g_t, sample_y.subgradient)
        assert np.linalg.norm(g_next) <= n + _NORM_SLACK * max(1.0, n)
        certificate = _mix_certificate(certificate, lam, y)
        g_t = g_next
        t += 1
    return LoopResult(g_t, Status.BUDGET_EXHAUSTED, t, certificate)
