"""Experiment time series: rows, stopping rules, and CSV persistence.

A trace is a list of rows keyed by cumulative oracle calls.  Driver loops
emit one row per outer iteration; a checkpoint recorder attached to the
oracle adds best-value rows between iterations, geometrically downsampled
(one checkpoint per 1.1x growth in calls) to bound trace size.

CSV schema (stable):
    oracle_calls,k,f_current,f_best,gap_best,sigma,step_kind,R_k,wall_ns
Optional fields are empty when absent.  A leading ``# key=value ...``
comment line carries run metadata; parsing round-trips it.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

CSV_HEADER = "oracle_calls,k,f_current,f_best,gap_best,sigma,step_kind,R_k,wall_ns"

STEP_NONE = "none"
STEP_ACCEPTED = "accepted"


@dataclass
class TraceRow:
    oracle_calls: int
    k: int
    f_current: float
    f_best: float
    gap_best: float | None = None
    sigma: float | None = None
    step_kind: str = STEP_NONE
    r_k: float | None = None
    wall_ns: int = 0


@dataclass
class StoppingRule:
    """Primary stop rule with the call budget as a hard cap.

    Exactly one primary: target_gap (stop when best gap <= eps, needs
    f_star), rk_tol (stop when the linesearch optimality gap <= eps), or
    the budget itself when neither is set.
    """

    budget: int
    target_gap: float | None = None
    rk_tol: float | None = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.target_gap is not None and self.rk_tol is not None:
            raise ValueError("choose a single primary stop rule")


class CheckpointRecorder:
    """Oracle hook collecting (calls, best value) at geometric intervals."""

    def __init__(self, factor: float = 1.1):
        self.factor = factor
        self.marks: list[tuple[int, float, int]] = []
        self._next = 1
        self._t0 = time.perf_counter_ns()

    def __call__(self, oracle) -> None:
        if oracle.point_queries >= self._next:
            wall = time.perf_counter_ns() - self._t0
            self.marks.append((oracle.point_queries, oracle.best_value, wall))
            nxt = int(oracle.point_queries * self.factor)
            self._next = max(nxt, oracle.point_queries + 1)

    def elapsed_ns(self) -> int:
        return time.perf_counter_ns() - self._t0


def merge_checkpoints(rows: list[TraceRow],
                      marks: list[tuple[int, float, int]],
                      f_star: float | None) -> list[TraceRow]:
    """Interleave checkpoint marks into iteration rows.

    Keeps oracle_calls strictly increasing: a mark colliding with an
    iteration row is dropped (the full row wins).  Checkpoint rows inherit
    the k and current value of the preceding iteration row.
    """
    taken = {r.oracle_calls for r in rows}
    merged = list(rows)
    for calls, best, wall in marks:
        if calls in taken:
            continue
        taken.add(calls)
        gap = best - f_star if f_star is not None else None
        merged.append(TraceRow(oracle_calls=calls, k=-1, f_current=float("nan"),
                               f_best=best, gap_best=gap, wall_ns=wall))
    merged.sort(key=lambda r: r.oracle_calls)
    k, f_cur = 0, float("nan")
    for r in merged:
        if r.k >= 0:
            k, f_cur = r.k, r.f_current
        else:
            r.k, r.f_current = k, f_cur
    return merged


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace(path: str | Path, rows: list[TraceRow],
                meta: dict | None = None) -> None:
    path = Path(path)
    lines = []
    if meta:
        pairs = " ".join(f"{k}={v}" for k, v in meta.items())
        lines.append(f"# {pairs}")
    lines.append(CSV_HEADER)
    for r in rows:
        lines.append(",".join([
            str(r.oracle_calls), str(r.k), _fmt(r.f_current), _fmt(r.f_best),
            _fmt(r.gap_best), _fmt(r.sigma), r.step_kind, _fmt(r.r_k),
            str(r.wall_ns),
        ]))
    path.write_text("\n".join(lines) + "\n")


def _parse_opt(s: str) -> float | None:
    return None if s == "" else float(s)


def read_trace(path: str | Path) -> tuple[list[TraceRow], dict]:
    path = Path(path)
    meta: dict = {}
    rows: list[TraceRow] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for pair in line[1:].split():
                    if "=" in pair:
                        k, v = pair.split("=", 1)
                        meta[k] = v
                continue
            if line == CSV_HEADER:
                continue
            parts = line.split(",")
            rows.append(TraceRow(
                oracle_calls=int(parts[0]), k=int(parts[1]),
                f_current=float(parts[2]), f_best=float(parts[3]),
                gap_best=_parse_opt(parts[4]), sigma=_parse_opt(parts[5]),
                step_kind=parts[6], r_k=_parse_opt(parts[7]),
                wall_ns=int(parts[8])))
    return rows, meta
