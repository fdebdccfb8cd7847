"""Desk-scale verification of the minimal-norm subgradient theory.

Brute-force hull machinery (the classical min-norm-point iteration over
growing corrals), sampled estimates of the minimal-norm element of the
sigma-ball subdifferential hull, the closed-form estimate for the
two-variable model function u^2 + |v|, the normal/tangent region
classifier, and the gradient-inequality checker used by the ``verify gi``
command.

The sampled hull estimate converges to the true minimal norm from above;
since every inequality checked here lower-bounds that quantity, an
estimate that satisfies the bound is conclusive.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import RngStream, Vector, uniform_ball


class MinNormError(RuntimeError):
    """Min-norm-point iteration exceeded its cap; carries the best iterate."""

    def __init__(self, message: str, best: Vector, residual: float):
        super().__init__(message)
        self.best = best
        self.residual = residual


def min_norm_point(points, tol: float = 1e-10) -> tuple[Vector, Vector]:
    """Minimum-norm element of the convex hull of a finite point set.

    Classical corral iteration: grow an affinely independent active set,
    solve the affine least-norm weights on it, and walk back toward the
    feasible simplex when weights go negative.  Returns the point and the
    full weight vector over the inputs; on exit the optimality certificate
    <p, q> >= |p|^2 - tol holds for every input q, else MinNormError carries
    the best iterate and its residual.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("need a nonempty list of equal-dimension points")
    n = P.shape[0]
    eps = 1e-14

    start = int(np.argmin(np.einsum("ij,ij->i", P, P)))
    corral = [start]
    lam = np.array([1.0])
    x = P[start].copy()

    cap = 10 * n
    for _ in range(cap):
        dots = P @ x
        j = int(np.argmin(dots))
        if dots[j] >= float(x @ x) - tol:
            break
        if j in corral:
            break  # numerically stalled; the final check decides
        corral.append(j)
        lam = np.append(lam, 0.0)

        for _ in range(n + 1):
            alpha = _affine_min_norm_weights(P[corral])
            if alpha.min() >= -eps:
                lam = np.maximum(alpha, 0.0)
                lam /= lam.sum()
                break
            # walk from lam toward alpha until a weight hits zero, drop it
            neg = alpha < -eps
            theta = float(np.min(lam[neg] / (lam[neg] - alpha[neg])))
            lam = np.maximum(theta * alpha + (1.0 - theta) * lam, 0.0)
            keep = lam > eps
            if keep.all():
                keep[int(np.argmin(lam))] = False
            corral = [c for c, k in zip(corral, keep) if k]
            lam = lam[keep]
            lam /= lam.sum()
        x_new = lam @ P[corral]
        if j not in corral and np.array_equal(x_new, x):
            break  # degenerate add rejected outright; stalled
        x = x_new

    dots = P @ x
    residual = float(x @ x) - float(dots.min())
    if residual > tol:
        raise MinNormError(
            f"no optimality certificate within the iteration cap "
            f"(residual {residual:.3e} > tol {tol:.1e})",
            best=x, residual=residual)

    weights = np.zeros(n)
    for c, w in zip(corral, lam):
        weights[c] += w
    return x, weights


def _affine_min_norm_weights(C: np.ndarray) -> np.ndarray:
    """Weights minimizing |sum_i alpha_i C_i| subject to sum alpha = 1."""
    k = C.shape[0]
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = C @ C.T
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return sol[:k]


def goldstein_hull_points(problem, x: Vector, sigma: float, samples: int,
                          rng: RngStream) -> np.ndarray:
    """Subgradients at x and at `samples` uniform points of the sigma-ball."""
    pts = [problem.eval(x)[1]]
    for _ in range(samples):
        y = uniform_ball(rng, x, sigma)
        pts.append(problem.eval(y)[1])
    return np.asarray(pts)


def goldstein_min_norm_sampled(problem, x: Vector, sigma: float,
                               samples: int, rng: RngStream,
                               tol: float = 1e-10) -> float:
    """Upper bound on the distance from 0 to the sigma-ball subdifferential.

    Monotone nonincreasing in the sample set; converges from above as
    samples grow.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    pts = goldstein_hull_points(problem, x, sigma, samples, rng)
    point, _ = min_norm_point(pts, tol=tol)
    return float(np.linalg.norm(point))


def uv_min_norm_subgradient(x: Vector, sigma: float) -> Vector:
    """Closed-form minimal-norm element for u^2 + |v| over the sigma ball.

    Off-axis balls (sigma < |v|) see one smooth sheet: the hull is the
    segment [2(u-sigma), 2(u+sigma)] at normal height sign(v).  Balls
    crossing the axis add the opposite sheet of tangent half-width
    w = sqrt(sigma^2 - v^2); mixing the two sheets cancels the normal
    coordinate, leaving the interval 2u +/- (sigma + w) at height zero.
    The crossing branch is an upper-bound model validated against the
    sampled hull, not trusted standalone.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    u, v = float(x[0]), float(x[1])
    if sigma < abs(v):
        c = float(np.clip(0.0, 2.0 * (u - sigma), 2.0 * (u + sigma)))
        return np.array([c, np.sign(v)])
    w = math.sqrt(sigma * sigma - v * v)
    c = float(np.clip(0.0, 2.0 * u - (sigma + w), 2.0 * u + (sigma + w)))
    return np.array([c, 0.0])


def uv_goldstein_min_norm(x: Vector, sigma: float) -> float:
    return float(np.linalg.norm(uv_min_norm_subgradient(x, sigma)))


@dataclass(frozen=True)
class RegularityConstants:
    """Growth/smoothness constants of the model instance and the derived
    region parameters (a1, a2) and inequality constant eta."""

    gamma: float    # quadratic growth
    mu: float       # aiming: subgradient correlation with the normal
    L: float        # bound on subgradient norms over the test ball
    beta: float     # gradient growth rate along the manifold
    a1: float
    a2: float
    eta: float

    def __post_init__(self):
        for name in ("gamma", "mu", "L", "beta", "a1", "a2", "eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (self.a1 < 1 and self.a2 < 1):
            raise ValueError("a1, a2 must lie in (0, 1)")
        expected = gradient_inequality_constant(
            self.gamma, self.mu, self.L, self.beta, self.a1, self.a2)
        if abs(self.eta - expected) > 1e-12 * max(1.0, expected):
            raise ValueError(f"eta={self.eta} inconsistent, expected {expected}")


def gradient_inequality_constant(gamma, mu, L, beta, a1, a2) -> float:
    return min(gamma * a2 / (8.0 * max(4.0 * L * a2 * a2, beta)),
               mu * a1 / (4.0 * max(2.0 * L, beta / (a2 * a2))))


#: radius bound below which the model-instance constants are valid
UV_DELTA = 1.0
#: tangential-smoothness deviation rate of the model instance
UV_C_A = 2.0


def uv_constants(radius: float = 0.25) -> RegularityConstants:
    """Constants of u^2 + |v| on the ball of the given radius about 0.

    gamma = 2 (u^2 + |v| >= u^2 + v^2 for |v| <= 1), mu = 1/4 of the unit
    off-axis subgradient norm, L = sup |(2u, sign v)| over the ball,
    beta = 2 (the gap bound |v| + u^2 <= L |v| + (beta/2) u^2 is tight).
    a1 and a2 sit at their admissible ceilings for these values.
    """
    if not 0 < radius <= UV_DELTA / 4:
        raise ValueError(
            f"radius must lie in (0, {UV_DELTA / 4}] for these constants")
    gamma, mu, beta = 2.0, 0.25, 2.0
    L = math.sqrt(4.0 * radius * radius + 1.0)
    a1 = mu / (8.0 * (mu + L))
    a2 = min(gamma / (8.0 * UV_C_A), min(1.0, 1.0 / UV_DELTA) / 2.0)
    eta = gradient_inequality_constant(gamma, mu, L, beta, a1, a2)
    return RegularityConstants(gamma=gamma, mu=mu, L=L, beta=beta,
                               a1=a1, a2=a2, eta=eta)


class RegionLabel(enum.Enum):
    NORMAL = "normal"
    TANGENT = "tangent"
    NEITHER = "neither"


def classify_region(x: Vector, sigma: float,
                    consts: RegularityConstants) -> RegionLabel:
    """Label an (x, sigma) pair on the model instance (manifold = u-axis).

    Normal: sigma within [a1/2, a1] times the distance to the axis, and
    that distance dominates the squared tangential distance.  Tangent:
    sigma within [a2/2, a2] times the tangential distance, and the
    normal-to-sigma ratio is small.  Normal is checked first.
    """
    u, v = float(x[0]), float(x[1])
    dist, tang = abs(v), abs(u)
    a1, a2 = consts.a1, consts.a2
    if (0.5 * a1 * dist <= sigma <= a1 * dist
            and a2 * a2 * tang * tang <= dist):
        return RegionLabel.NORMAL
    if (0.5 * a2 * tang <= sigma <= a2 * tang
            and dist / sigma <= 2.0 * a2 * tang):
        return RegionLabel.TANGENT
    return RegionLabel.NEITHER


def admissible_sigma(x: Vector, consts: RegularityConstants) -> float:
    """A sigma realizing the normal or tangent region at x != 0.

    Off the axis with the distance dominating the squared tangential
    distance, take the top of the normal window; otherwise the bottom of
    the tangent window works (on the axis trivially so).
    """
    u, v = float(x[0]), float(x[1])
    if u == 0.0 and v == 0.0:
        raise ValueError("undefined at the minimizer itself")
    if abs(v) > 0.0 and consts.a2 ** 2 * u * u <= abs(v):
        return consts.a1 * abs(v)
    return 0.5 * consts.a2 * abs(u)


def _sample_ball_2d(rng: RngStream, radius: float) -> Vector:
    while True:
        x = uniform_ball(rng, np.zeros(2), radius)
        if x[0] != 0.0 or x[1] != 0.0:
            return x


@dataclass
class Violation:
    x: Vector
    sigma: float
    lhs: float
    rhs: float


@dataclass
class GIReport:
    n_samples: int
    radius: float
    n_normal: int
    n_tangent: int
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_gradient_inequality(consts: RegularityConstants, n_samples: int,
                              radius: float, rng: RngStream) -> GIReport:
    """Sample the ball and test sigma * min-norm >= eta * gap at each point.

    For every sample a sigma realizing one of the two regions exists; the
    minimal-norm estimate is evaluated in closed form.  Violations are
    collected, not raised.
    """
    n_normal = n_tangent = 0
    violations: list[Violation] = []
    for _ in range(n_samples):
        x = _sample_ball_2d(rng, radius)
        sigma = admissible_sigma(x, consts)
        label = classify_region(x, sigma, consts)
        if label is RegionLabel.NORMAL:
            n_normal += 1
        elif label is RegionLabel.TANGENT:
            n_tangent += 1
        lhs = sigma * uv_goldstein_min_norm(x, sigma)
        rhs = consts.eta * (x[0] * x[0] + abs(x[1]))
        if lhs < rhs:
            violations.append(Violation(x=x, sigma=sigma, lhs=lhs, rhs=rhs))
    return GIReport(n_samples=n_samples, radius=radius, n_normal=n_normal,
                    n_tangent=n_tangent, violations=violations)


def sample_normal_pairs(consts: RegularityConstants, n: int, radius: float,
                        rng: RngStream) -> list[tuple[Vector, float]]:
    """Seeded (x, sigma) pairs labeled Normal, drawn inside the test ball."""
    pairs = []
    while len(pairs) < n:
        x = _sample_ball_2d(rng, radius)
        u, v = float(x[0]), float(x[1])
        if v == 0.0 or consts.a2 ** 2 * u * u > abs(v):
            continue
        sigma = (0.5 + 0.5 * rng.uniform()) * consts.a1 * abs(v)
        assert classify_region(x, sigma, consts) is RegionLabel.NORMAL
        pairs.append((x, sigma))
    return pairs


def sample_tangent_pairs(consts: RegularityConstants, n: int, radius: float,
                         rng: RngStream) -> list[tuple[Vector, float]]:
    """Seeded (x, sigma) pairs labeled Tangent, drawn inside the test ball."""
    pairs = []
    while len(pairs) < n:
        # shrink the tangential draw slightly: the replaced normal
        # coordinate must not push x past the ball
        x = _sample_ball_2d(rng, 0.99 * radius)
        u = float(x[0])
        if u == 0.0:
            continue
        sigma = (0.5 + 0.5 * rng.uniform()) * consts.a2 * abs(u)
        v = (2.0 * rng.uniform() - 1.0) * 2.0 * consts.a2 * abs(u) * sigma
        x = np.array([u, v])
        if classify_region(x, sigma, consts) is not RegionLabel.TANGENT:
            continue
        if float(np.linalg.norm(x)) > radius:
            continue
        pairs.append((x, sigma))
    return pairs


@dataclass
class LowerBoundReport:
    n_normal: int
    n_tangent: int
    normal_violations: list[Violation]
    tangent_violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.normal_violations and not self.tangent_violations


def check_region_lower_bounds(consts: RegularityConstants, n: int,
                              radius: float, rng: RngStream) -> LowerBoundReport:
    """Test the two region lower bounds on the model instance.

    Normal pairs: the minimal norm is at least mu/2.  Tangent pairs: the
    tangential component of the minimal-norm element is at least
    (gamma/4) |u|.
    """
    d2 = consts.mu / 2.0
    c1 = consts.gamma / 4.0
    normal_violations: list[Violation] = []
    tangent_violations: list[Violation] = []
    for x, sigma in sample_normal_pairs(consts, n, radius, rng):
        norm = uv_goldstein_min_norm(x, sigma)
        if norm < d2:
            normal_violations.append(Violation(x, sigma, norm, d2))
    for x, sigma in sample_tangent_pairs(consts, n, radius, rng):
        witness = uv_min_norm_subgradient(x, sigma)
        bound = c1 * abs(float(x[0]))
        if abs(float(witness[0])) < bound:
            tangent_violations.append(
                Violation(x, sigma, abs(float(witness[0])), bound))
    return LowerBoundReport(n_normal=n, n_tangent=n,
                            normal_violations=normal_violations,
                            tangent_violations=tangent_violations)
