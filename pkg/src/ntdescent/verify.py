"""Self-contained verification batteries behind ``ntd verify``.

Three suites, each returning a report with a violation list so both the
CLI (exit code 1 on any violation) and the test suite can drive them:

* ``gi``          -- the gradient inequality and the two region lower
                     bounds on the two-variable model instance;
* ``fd``          -- central finite-difference directional checks of every
                     problem subgradient at seeded smooth points;
* ``invariants``  -- structural invariants of the building blocks (segment
                     projection, loop monotonicity, certificates, hull
                     min-norm, sampling).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CountingOracle, RngStream, uniform_ball, uniform_segment
from .descent import Status, ndescent, segment_min_norm, tdescent
from .driver import Schedules, run_ntd
from .harness import sphere_point
from .lab import (check_gradient_inequality, check_region_lower_bounds,
                  min_norm_point, uv_constants)
from .problems import (EigProductProblem, LowerBoundProblem,
                       MaxOfSmoothProblem, QuadraticSensingProblem, UVProblem)
from .trace import StoppingRule

#: per-problem relative tolerance of the directional derivative check
FD_TOLERANCES = {"lb": 1e-6, "mos": 1e-6, "qs": 1e-5, "eig": 1e-4, "uv": 1e-6}

FD_STEP = 1e-6


@dataclass
class Report:
    name: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, passed: bool, message: str) -> None:
        self.checks += 1
        if not passed:
            self.failures.append(message)

    def lines(self) -> list[str]:
        status = "ok" if self.ok else "FAIL"
        out = [f"[{status}] {self.name}: {self.checks} checks, "
               f"{len(self.failures)} violations"]
        out.extend(f"    {m}" for m in self.failures[:20])
        if len(self.failures) > 20:
            out.append(f"    ... {len(self.failures) - 20} more")
        return out


# ---------------------------------------------------------------------------
# gradient inequality suite

def verify_gi(samples: int = 1000, seed: int = 0,
              radius: float = 0.25, lb_samples: int = 500) -> Report:
    report = Report("gradient-inequality")
    consts = uv_constants(radius)
    rng = RngStream(seed)
    gi = check_gradient_inequality(consts, samples, radius, rng.substream(0))
    report.checks += gi.n_samples
    for v in gi.violations:
        report.failures.append(
            f"sigma*dist {v.lhs:.3e} < eta*gap {v.rhs:.3e} at x={v.x}, "
            f"sigma={v.sigma:.3e}")
    lower = check_region_lower_bounds(consts, lb_samples, radius,
                                      rng.substream(1))
    report.checks += lower.n_normal + lower.n_tangent
    for v in lower.normal_violations:
        report.failures.append(
            f"normal pair min-norm {v.lhs:.3e} < {v.rhs:.3e} at x={v.x}")
    for v in lower.tangent_violations:
        report.failures.append(
            f"tangent component {v.lhs:.3e} < {v.rhs:.3e} at x={v.x}")
    return report


# ---------------------------------------------------------------------------
# finite-difference suite

def _fd_problem(problem_id: str, seed: int):
    if problem_id == "lb":
        return LowerBoundProblem(d=30, m=10)
    if problem_id == "mos":
        return MaxOfSmoothProblem.generate(d=20, m=5, seed=seed)
    if problem_id == "qs":
        return QuadraticSensingProblem.generate(N=12, r_star=2, r=3, seed=seed)
    if problem_id == "eig":
        return EigProductProblem.generate(N=8, K=4, seed=seed)
    if problem_id == "uv":
        return UVProblem()
    raise ValueError(f"unknown problem id {problem_id!r}")


def _smooth_at(problem, problem_id: str, x, delta, h) -> bool:
    """Is the active selection stable across the stencil x +/- h*delta?"""
    if problem_id in ("lb", "mos"):
        def active(z):
            if problem_id == "lb":
                return int(np.argmax(z[:problem.m]))
            Hx = problem.H @ z
            return int(np.argmax(problem.g @ z + 0.5 * (Hx @ z)))
        return active(x) == active(x + h * delta) == active(x - h * delta)
    if problem_id == "qs":
        def signs(z):
            X = z.reshape((problem.N, problem.r), order="F")
            AX, BX = problem.A @ X, problem.B @ X
            rho = (np.einsum("ij,ij->i", AX, AX)
                   - np.einsum("ij,ij->i", BX, BX) - problem.measurements)
            return np.sign(rho)
        s0 = signs(x)
        return (np.all(s0 != 0) and np.array_equal(s0, signs(x + h * delta))
                and np.array_equal(s0, signs(x - h * delta)))
    if problem_id == "eig":
        V = x.reshape((problem.N, problem.N), order="F")
        if np.any(np.linalg.norm(V, axis=1) < 1e-8):
            return False
        C = V / np.linalg.norm(V, axis=1)[:, None]
        evals = np.linalg.eigvalsh(problem.A * (C @ C.T))
        gap = evals[-problem.K] - evals[-problem.K - 1] \
            if problem.K < problem.N else evals[0]
        return evals[-problem.K] > 1e-8 and gap > 1e-6
    if problem_id == "uv":
        return abs(float(x[1])) > 1e-3
    return True


def verify_fd(problem_id: str, seed: int = 0, points: int = 100,
              h: float = FD_STEP) -> Report:
    """Central differences along random directions at stable smooth points."""
    report = Report(f"finite-difference[{problem_id}]")
    problem = _fd_problem(problem_id, seed)
    tol = FD_TOLERANCES[problem_id]
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(99,))))
    found = 0
    attempts = 0
    while found < points and attempts < 100 * points:
        attempts += 1
        x = rng.normal(size=problem.dim)
        delta = rng.normal(size=problem.dim)
        delta /= np.linalg.norm(delta)
        if not _smooth_at(problem, problem_id, x, delta, h):
            continue
        found += 1
        fp, _ = problem.eval(x + h * delta)
        fm, _ = problem.eval(x - h * delta)
        fd = (fp - fm) / (2.0 * h)
        _, g = problem.eval(x)
        ip = float(g @ delta)
        err = abs(fd - ip) / max(1.0, abs(ip))
        report.record(err <= tol,
                      f"directional mismatch {err:.3e} > {tol:.1e} at "
                      f"point #{found}")
    if found < points:
        report.record(False, f"only found {found}/{points} stable points")
    return report


def verify_fd_all(seed: int = 0, points: int = 100) -> list[Report]:
    return [verify_fd(pid, seed=seed, points=points) for pid in FD_TOLERANCES]


# ---------------------------------------------------------------------------
# structural invariants suite

def _segment_checks(report: Report, rng: np.random.Generator) -> None:
    for _ in range(500):
        d = int(rng.integers(1, 6))
        a = rng.normal(size=d)
        b = rng.normal(size=d)
        p = segment_min_norm(a, b)
        na, nb, np_ = (np.linalg.norm(a), np.linalg.norm(b),
                       np.linalg.norm(p))
        report.record(np_ <= min(na, nb) + 1e-12,
                      f"segment point norm {np_} above endpoints")
        # distance from p to the segment
        ab = b - a
        den = float(ab @ ab)
        t = 0.0 if den == 0 else float(np.clip((p - a) @ ab / den, 0, 1))
        dist = float(np.linalg.norm(a + t * ab - p))
        report.record(dist < 1e-12, f"segment point off the segment by {dist}")


def _loop_checks(report: Report, seed: int) -> None:
    problem = UVProblem()
    rng = RngStream(seed).substream(3)
    gen = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(4,))))
    for trial in range(50):
        x = gen.normal(size=2)
        f_x, g = problem.eval(x)
        if np.linalg.norm(g) == 0:
            continue
        sigma = float(10.0 ** gen.uniform(-3, 0))
        oracle = CountingOracle(problem)
        cert = [(1.0, x.copy())]
        if trial % 2 == 0:
            res = tdescent(oracle, x, g, sigma, 8, f_x, certificate=cert)
            per_iter = 1
        else:
            res = ndescent(oracle, x, g, sigma, 8, f_x,
                           rng.substream(trial), certificate=cert)
            per_iter = 2
        # call accounting: one (or two) calls per iteration, plus the
        # descent-exit probe
        expected = per_iter * res.inner_iterations
        if res.status is Status.DESCENT_ACHIEVED:
            expected += 1
        report.record(oracle.point_queries == expected,
                      f"oracle calls {oracle.point_queries} != {expected}")
        # certificate reproduces the output from ball subgradients
        w_sum = sum(w for w, _ in res.certificate)
        report.record(abs(w_sum - 1.0) <= 1e-12,
                      f"certificate weights sum {w_sum}")
        in_ball = all(np.linalg.norm(p - x) <= sigma + 1e-12
                      for _, p in res.certificate)
        report.record(in_ball, "certificate point outside the sigma-ball")
        combo = sum(w * problem.eval(p)[1] for w, p in res.certificate)
        report.record(float(np.linalg.norm(combo - res.g)) <= 1e-9,
                      "certificate combination does not reproduce g")
        if res.status is Status.DESCENT_ACHIEVED:
            n = float(np.linalg.norm(res.g))
            probe_val = problem.eval(x - (sigma / n) * res.g)[0]
            ok = probe_val <= f_x - (sigma / 8.0) * n + 1e-10 * max(1.0, abs(f_x))
            report.record(ok, "descent exit fails re-evaluation")


def _linesearch_checks(report: Report, seed: int) -> None:
    problem = LowerBoundProblem(d=10, m=3)
    x0 = sphere_point(problem.dim, seed)
    outcomes = []
    run_ntd(problem, x0, Schedules(), StoppingRule(budget=2000), seed,
            f_star=problem.known_optimum, collect_outcomes=outcomes)
    for out in outcomes:
        for gp in out.norm_trace:
            report.record(
                gp.v_out_norm <= gp.u_norm + 1e-12 * max(1.0, gp.u_norm)
                and gp.u_norm <= gp.v_in_norm + 1e-12 * max(1.0, gp.v_in_norm),
                f"norm interleaving broken at sigma={gp.sigma}")
        if out.moved:
            slack = out.chosen_norm / out.scale + 1e-12
            report.record(out.chosen_sigma <= slack,
                          f"accepted step violates the trust region: "
                          f"sigma={out.chosen_sigma} norm={out.chosen_norm} "
                          f"scale={out.scale}")


def _minnorm_checks(report: Report, rng: np.random.Generator) -> None:
    tri = np.array([[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]])
    p, w = min_norm_point(tri)
    report.record(float(np.linalg.norm(p)) <= 1e-6,
                  f"triangle hull min-norm {np.linalg.norm(p)} != 0")
    pair = np.array([[1.0, 0.0], [0.0, 1.0]])
    p, w = min_norm_point(pair)
    report.record(np.allclose(p, [0.5, 0.5], atol=1e-10),
                  f"two-point min-norm {p}")
    for _ in range(50):
        pts = rng.normal(size=(int(rng.integers(2, 12)), 3))
        p, w = min_norm_point(pts)
        report.record(abs(w.sum() - 1.0) <= 1e-8, "hull weights not affine")
        report.record(np.linalg.norm(w @ pts - p) <= 1e-8,
                      "hull weights do not reproduce the point")
        dots = pts @ p
        report.record(dots.min() >= p @ p - 1e-8,
                      "optimality certificate fails")


def _sampling_checks(report: Report, seed: int) -> None:
    rng = RngStream(seed).substream(5)
    draws = np.array([uniform_ball(rng, np.zeros(1), 1.0)[0]
                      for _ in range(100000)])
    report.record(abs(draws.mean()) <= 0.02,
                  f"1-d ball mean {draws.mean():.4f} off 0")
    rng2 = RngStream(seed).substream(6)
    pts = np.array([uniform_ball(rng2, np.zeros(2), 1.0)
                    for _ in range(100000)])
    frac = float(np.mean(np.linalg.norm(pts, axis=1) <= 0.5))
    report.record(abs(frac - 0.25) <= 0.02,
                  f"2-d ball radius-1/2 mass {frac:.4f} off 0.25")
    rng3 = RngStream(seed).substream(7)
    a, b = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    seg = np.array([uniform_segment(rng3, a, b)[0] for _ in range(100000)])
    report.record(abs(seg.mean() - 0.5) <= 0.005,
                  f"segment mean {seg.mean():.4f} off 0.5")


def verify_invariants(seed: int = 0) -> Report:
    report = Report("invariants")
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(8,))))
    _segment_checks(report, rng)
    _loop_checks(report, seed)
    _linesearch_checks(report, seed)
    _minnorm_checks(report, rng)
    _sampling_checks(report, seed)
    return report
