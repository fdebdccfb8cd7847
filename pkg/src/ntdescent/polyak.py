"""Subgradient-method baseline with the Polyak steplength.

Each iteration queries the oracle once at the current point and steps
x <- x - (f(x) - f_star) / |w|^2 * w.  The steplength needs the optimal
value f_star (known for the benchmark problems, estimated externally for
the eigenvalue-product instance).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import CountingOracle, Problem, Vector, as_vector
from .trace import (STEP_ACCEPTED, CheckpointRecorder, TraceRow,
                    merge_checkpoints)


class StagnationError(RuntimeError):
    """Zero subgradient with a value still above f_star: no step exists."""


@dataclass
class PolyakState:
    x: Vector
    f_star: float
    best_f: float
    best_x: Vector


def polyak_step(oracle: CountingOracle, state: PolyakState) -> PolyakState:
    """One Polyak update; costs one oracle call.

    A value below f_star means the supplied optimum is too high: warn and
    hold position (step clamped to zero).
    """
    sample = oracle.query(state.x)
    f, w = sample.value, sample.subgradient
    wn2 = float(w @ w)
    if f < state.f_star:
        warnings.warn(
            f"observed value {f} below the supplied optimum {state.f_star}; "
            "the f_star estimate is too high, holding position",
            stacklevel=2)
        step = 0.0
    elif wn2 == 0.0:
        if f > state.f_star:
            raise StagnationError(
                f"zero subgradient at value {f} > f_star {state.f_star}")
        step = 0.0
    else:
        step = (f - state.f_star) / wn2
    x_next = state.x - step * w
    best_f, best_x = state.best_f, state.best_x
    if f < best_f:
        best_f, best_x = f, state.x.copy()
    return PolyakState(x=x_next, f_star=state.f_star,
                       best_f=best_f, best_x=best_x)


def run_polyak(problem: Problem, x0: Vector, f_star: float,
               budget: int) -> list[TraceRow]:
    """Iterate Polyak steps until the call budget is met.

    The trace gets one row per iteration plus geometric best-value
    checkpoints; stagnation ends the run with the rows so far.
    """
    x0 = as_vector(x0)
    recorder = CheckpointRecorder()
    oracle = CountingOracle(problem, on_query=recorder)
    state = PolyakState(x=x0, f_star=f_star, best_f=np.inf, best_x=x0.copy())
    rows: list[TraceRow] = []
    k = 0
    while True:
        try:
            state = polyak_step(oracle, state)
        except StagnationError:
            break
        rows.append(TraceRow(
            oracle_calls=oracle.point_queries, k=k,
            f_current=oracle.last_value, f_best=state.best_f,
            gap_best=state.best_f - f_star,
            step_kind=STEP_ACCEPTED, wall_ns=recorder.elapsed_ns()))
        k += 1
        if oracle.point_queries >= budget:
            break
    return merge_checkpoints(rows, recorder.marks, f_star)
