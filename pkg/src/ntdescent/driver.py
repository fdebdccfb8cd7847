"""Outer method: grid line search with a trust region, and the driver loop.

The line search sweeps sigma over the dyadic grid 2^-G, ..., 2^-1, nesting
the two inner loops at each radius (tangent first, then normal), and picks
the best of the anchor and all normalized steps that respect the trust
region sigma_i <= |v_{i+1}| / s.  Since sigma grows along the grid while
the vector norms shrink, the sweep stops at the first trust-region
violation; with the adaptive extension enabled it instead keeps growing
sigma tenfold past the grid until a violation or a cap.

The driver iterates the line search with scale s_k = max(|g_k|, c0*|g_0|),
reusing the winning candidate's oracle sample as the next iterate's value
and subgradient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import CountingOracle, OracleSample, Problem, RngStream, Vector, as_vector
from .descent import Certificate, LoopResult, ndescent, tdescent
from .trace import (STEP_ACCEPTED, STEP_NONE, CheckpointRecorder, StoppingRule,
                    TraceRow, merge_checkpoints)

#: largest grid size: caps the smallest radius 2^-G near 1e-16
GRID_CAP = 54

#: growth factor of the adaptive sigma extension
ADAPTIVE_FACTOR = 10.0


@dataclass
class Schedules:
    """Per-iteration inner budget T_k and grid size G_k, plus the scale floor.

    Defaults follow the untuned schedule T_k = k+1, G_k = min(k+1, cap),
    c0 = 1e-6.
    """

    budget: Callable[[int], int] = lambda k: k + 1
    grid: Callable[[int], int] = lambda k: min(k + 1, GRID_CAP)
    c0: float = 1e-6
    grid_cap: int = GRID_CAP
    adaptive: bool = False
    adaptive_cap: float = math.inf

    def __post_init__(self):
        if not (0.0 < self.c0 <= 1.0):
            raise ValueError(f"c0 must lie in (0, 1], got {self.c0}")


@dataclass
class GridPoint:
    """Norm bookkeeping for one grid index: |v_i|, |u_i|, |v_{i+1}| at sigma_i."""

    sigma: float
    v_in_norm: float
    u_norm: float
    v_out_norm: float


@dataclass
class LinesearchOutcome:
    x_next: Vector
    moved: bool
    chosen_sigma: float | None
    chosen_norm: float | None
    candidates_evaluated: int
    gap_estimate: float | None
    sample: OracleSample | None
    scale: float = 1.0
    norm_trace: list[GridPoint] = field(default_factory=list)
    loop_results: list[tuple[float, LoopResult, LoopResult]] | None = None


@dataclass
class RunState:
    k: int
    x_k: Vector
    g_k: Vector
    f_k: float
    s_lb: float
    best_f: float
    best_x: Vector


def optimality_gap(pairs: list[tuple[float, float]]) -> float:
    """min over (sigma, |v|) pairs with sigma <= |v| of max(sigma, |v|^2).

    The input list is pre-filtered to sigma <= |v|; empty list gives inf.
    """
    if not pairs:
        return math.inf
    return min(max(sigma, v_norm * v_norm) for sigma, v_norm in pairs)


def linesearch(oracle: CountingOracle, x: Vector, g: Vector, s: float,
               G: int, T: int, rng: RngStream, adaptive: bool = False,
               adaptive_cap: float = math.inf, *, f_x: float,
               record_certificates: bool = False,
               early_break: bool = True) -> LinesearchOutcome:
    """One sweep of the sigma grid, returning the best trust-feasible step.

    Ties prefer the anchor x, then the smallest sigma.  ``early_break=False``
    disables the trust-region shortcut (the candidate set is unchanged; used
    to test the equivalence).
    """
    if not (math.isfinite(s) and s > 0):
        raise ValueError(f"scale s must be positive and finite, got {s}")
    if G < 1:
        raise ValueError(f"grid size must be >= 1, got {G}")
    if T < 0:
        raise ValueError(f"inner budget must be >= 0, got {T}")

    v = np.asarray(g, dtype=np.float64)
    cert: Certificate | None = [(1.0, x.copy())] if record_certificates else None

    norm_trace: list[GridPoint] = []
    loop_results: list[tuple[float, LoopResult, LoopResult]] | None = (
        [] if record_certificates else None)
    rk_pairs: list[tuple[float, float]] = []

    best_f = f_x
    best_sigma: float | None = None
    best_norm: float | None = None
    best_sample: OracleSample | None = None
    candidates = 0

    def sweep(sigma: float, index: int) -> bool:
        """Run both loops at sigma; returns False on trust-region violation."""
        nonlocal v, cert, best_f, best_sigma, best_norm, best_sample, candidates
        v_in = float(np.linalg.norm(v))
        t_res = tdescent(oracle, x, v, sigma, T, f_x, certificate=cert)
        n_res = ndescent(oracle, x, t_res.g, sigma, T, f_x,
                         rng.substream(index), certificate=t_res.certificate)
        u_norm = float(np.linalg.norm(t_res.g))
        v_out = float(np.linalg.norm(n_res.g))
        assert v_out <= u_norm + 1e-12 * max(1.0, u_norm)
        assert u_norm <= v_in + 1e-12 * max(1.0, v_in)
        norm_trace.append(GridPoint(sigma, v_in, u_norm, v_out))
        if loop_results is not None:
            loop_results.append((sigma, t_res, n_res))
        v = n_res.g
        cert = n_res.certificate
        if v_out > 0.0 and sigma <= v_out:
            rk_pairs.append((sigma, v_out))
        if v_out == 0.0 or sigma > v_out / s:
            return False
        step = x - (sigma / v_out) * v
        sample = oracle.query(step)
        candidates += 1
        if sample.value < best_f:
            best_f = sample.value
            best_sigma, best_norm, best_sample = sigma, v_out, sample
        return True

    violated = False
    for i in range(G):
        feasible = sweep(2.0 ** (-(G - i)), i)
        if not feasible:
            violated = True
            if early_break:
                break

    if adaptive and not violated:
        sigma = ADAPTIVE_FACTOR * 0.5
        index = G
        while sigma <= adaptive_cap:
            if not sweep(sigma, index):
                break
            sigma *= ADAPTIVE_FACTOR
            index += 1

    rk = optimality_gap(rk_pairs)
    moved = best_sample is not None
    return LinesearchOutcome(
        x_next=best_sample.point if moved else x,
        moved=moved,
        chosen_sigma=best_sigma,
        chosen_norm=best_norm,
        candidates_evaluated=candidates,
        gap_estimate=None if math.isinf(rk) else rk,
        sample=best_sample,
        scale=s,
        norm_trace=norm_trace,
        loop_results=loop_results,
    )


def ntd_step(state: RunState, schedules: Schedules, oracle: CountingOracle,
             rng: RngStream, *, record_certificates: bool = False,
             early_break: bool = True) -> tuple[RunState, LinesearchOutcome]:
    """One outer iteration; returns the new state and the sweep diagnostics."""
    s = max(float(np.linalg.norm(state.g_k)), state.s_lb)
    out = linesearch(
        oracle, state.x_k, state.g_k, s,
        schedules.grid(state.k), schedules.budget(state.k),
        rng.substream(state.k),
        adaptive=schedules.adaptive, adaptive_cap=schedules.adaptive_cap,
        f_x=state.f_k, record_certificates=record_certificates,
        early_break=early_break)
    if out.moved:
        assert out.sample is not None
        x, f, g = out.sample.point, out.sample.value, out.sample.subgradient
    else:
        x, f, g = state.x_k, state.f_k, state.g_k
    assert f <= state.f_k, "line search must never increase the value"
    best_f, best_x = state.best_f, state.best_x
    if oracle.best_value < best_f:
        best_f, best_x = oracle.best_value, oracle.best_point
    next_state = RunState(k=state.k + 1, x_k=x, g_k=g, f_k=f,
                          s_lb=state.s_lb, best_f=best_f, best_x=best_x)
    return next_state, out


def run_ntd(problem: Problem, x0: Vector, schedules: Schedules,
            stop: StoppingRule, seed: int, f_star: float | None = None,
            *, record_certificates: bool = False,
            collect_outcomes: list | None = None) -> list[TraceRow]:
    """Drive the outer loop to a stopping rule, emitting one row per iteration.

    Refuses to start from a zero subgradient (the normalized step is
    undefined there).  Checkpoint rows track the best value between
    iterations.  ``collect_outcomes`` (if given) receives the per-iteration
    LinesearchOutcome objects for diagnostics.
    """
    x0 = as_vector(x0)
    recorder = CheckpointRecorder()
    oracle = CountingOracle(problem, on_query=recorder)
    # spawn-key namespaces: 0 = problem generation, 1 = x0 draw, 2 = loops
    rng = RngStream(seed).substream(2)

    first = oracle.query(x0)
    g0_norm = float(np.linalg.norm(first.subgradient))
    if g0_norm == 0.0:
        raise ValueError(
            "initial subgradient is zero: the normalized-step method is "
            "undefined at stationary starts; perturb x0 or stop here")
    state = RunState(k=0, x_k=x0, g_k=first.subgradient, f_k=first.value,
                     s_lb=schedules.c0 * g0_norm,
                     best_f=first.value, best_x=x0.copy())

    def gap(v: float) -> float | None:
        return None if f_star is None else v - f_star

    rows = [TraceRow(oracle_calls=oracle.point_queries, k=0,
                     f_current=state.f_k, f_best=state.best_f,
                     gap_best=gap(state.best_f), wall_ns=recorder.elapsed_ns())]

    while oracle.point_queries < stop.budget:
        if float(np.linalg.norm(state.g_k)) == 0.0:
            # an exactly-zero subgradient pins the iterate and would burn
            # no further oracle calls; end the run here
            break
        state, out = ntd_step(state, schedules, oracle, rng,
                              record_certificates=record_certificates)
        if collect_outcomes is not None:
            collect_outcomes.append(out)
        rows.append(TraceRow(
            oracle_calls=oracle.point_queries, k=state.k,
            f_current=state.f_k, f_best=state.best_f,
            gap_best=gap(state.best_f),
            sigma=out.chosen_sigma,
            step_kind=STEP_ACCEPTED if out.moved else STEP_NONE,
            r_k=out.gap_estimate, wall_ns=recorder.elapsed_ns()))
        if stop.target_gap is not None and f_star is not None \
                and state.best_f - f_star <= stop.target_gap:
            break
        if stop.rk_tol is not None and out.gap_estimate is not None \
                and out.gap_estimate <= stop.rk_tol:
            break

    return merge_checkpoints(rows, recorder.marks, f_star)
