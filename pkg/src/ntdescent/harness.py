"""Experiment configuration, dispatch, and trace comparison.

A configuration names a problem (with its generation parameters), an
algorithm, a seed, a stop rule, and an output path.  It can be built from
CLI flags, from a flat ``key=value`` file, or both (flags override the
file).  Runs are deterministic in the seed: problem generation, the initial
point (uniform on the sphere times a scale), and all loop randomness derive
from disjoint substreams of it.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, Vector
from .driver import Schedules, run_ntd
from .polyak import run_polyak
from .problems import (EigProductProblem, LowerBoundProblem,
                       MaxOfSmoothProblem, QuadraticSensingProblem, UVProblem,
                       load_matrix)
from .trace import StoppingRule, TraceRow, write_trace

PROBLEM_IDS = ("lb", "mos", "qs", "eig", "uv")
ALGO_IDS = ("ntd", "polyak")
STOP_KINDS = ("budget", "gap", "rk")


class UsageError(ValueError):
    """Bad configuration or flags; maps to exit code 2."""


@dataclass
class ExperimentConfig:
    problem: str
    algo: str
    seed: int
    budget: int
    out: str | None = None
    dim: int = 100
    m: int = 10
    N: int = 60
    K: int = 7
    r_star: int = 3
    r: int = 5
    matrix: str | None = None
    c0: float = 1e-6
    adaptive: bool = False
    adaptive_cap: float = math.inf
    f_star: float | None = None
    stop: str = "budget"
    target_gap: float | None = None
    rk_tol: float | None = None
    x0_scale: float = 1.0

    def __post_init__(self):
        if self.problem not in PROBLEM_IDS:
            raise UsageError(f"unknown problem id {self.problem!r}, "
                             f"choose from {PROBLEM_IDS}")
        if self.algo not in ALGO_IDS:
            raise UsageError(f"unknown algorithm id {self.algo!r}, "
                             f"choose from {ALGO_IDS}")
        if self.stop not in STOP_KINDS:
            raise UsageError(f"unknown stop rule {self.stop!r}, "
                             f"choose from {STOP_KINDS}")
        if self.budget < 1:
            raise UsageError("budget must be >= 1")
        if self.stop == "gap" and self.target_gap is None:
            raise UsageError("stop rule 'gap' needs --target-gap")
        if self.stop == "rk" and self.rk_tol is None:
            raise UsageError("stop rule 'rk' needs --rk-tol")
        if self.stop == "rk" and self.algo != "ntd":
            raise UsageError("the R_k stop rule only applies to ntd")

    def build_problem(self):
        if self.problem == "lb":
            return LowerBoundProblem(d=self.dim, m=self.m)
        if self.problem == "mos":
            return MaxOfSmoothProblem.generate(d=self.dim, m=self.m,
                                               seed=self.seed)
        if self.problem == "qs":
            return QuadraticSensingProblem.generate(
                N=self.N, r_star=self.r_star, r=self.r, seed=self.seed)
        if self.problem == "eig":
            if self.matrix is not None:
                return EigProductProblem(A=load_matrix(self.matrix), K=self.K)
            return EigProductProblem.generate(N=self.N, K=self.K,
                                              seed=self.seed)
        return UVProblem()

    def resolve_f_star(self, problem) -> float | None:
        return self.f_star if self.f_star is not None else problem.known_optimum

    def problem_key(self) -> str:
        """Identity used to refuse joining traces of different objectives."""
        return self.problem

    def label(self) -> str:
        parts = [self.problem]
        if self.problem in ("lb", "mos"):
            parts.append(f"d{self.dim}m{self.m}")
        elif self.problem == "qs":
            parts.append(f"N{self.N}rs{self.r_star}r{self.r}")
        elif self.problem == "eig":
            parts.append(f"N{self.N}K{self.K}")
        parts += [self.algo, f"s{self.seed}"]
        return "-".join(parts)

    def meta(self, f_star: float | None) -> dict:
        meta = {"problem": self.problem, "algo": self.algo,
                "seed": self.seed, "budget": self.budget}
        if self.problem in ("lb", "mos"):
            meta.update(dim=self.dim, m=self.m)
        elif self.problem == "qs":
            meta.update(N=self.N, r_star=self.r_star, r=self.r)
        elif self.problem == "eig":
            meta.update(N=self.N, K=self.K)
        if f_star is not None:
            meta["f_star"] = repr(f_star)
        return meta


def sphere_point(dim: int, seed: int, scale: float = 1.0) -> Vector:
    """Deterministic initial point: scale times a uniform unit vector."""
    rng = RngStream(seed).substream(1)
    z = rng.normal(dim)
    return (scale / float(np.linalg.norm(z))) * z


def run_experiment(config: ExperimentConfig,
                   write: bool = True) -> list[TraceRow]:
    """Run one configuration and (optionally) persist its trace CSV."""
    problem = config.build_problem()
    f_star = config.resolve_f_star(problem)
    x0 = sphere_point(problem.dim, config.seed, config.x0_scale)

    if config.algo == "polyak":
        if f_star is None:
            raise UsageError(
                "the Polyak stepsize needs the optimal value: none is known "
                "for this problem, estimate it from several ntd runs (e.g. "
                "stopped at R_k <= 1e-12) and pass --fstar")
        rows = run_polyak(problem, x0, f_star, config.budget)
    else:
        schedules = Schedules(c0=config.c0, adaptive=config.adaptive,
                              adaptive_cap=config.adaptive_cap)
        stop = StoppingRule(budget=config.budget,
                            target_gap=config.target_gap if config.stop == "gap" else None,
                            rk_tol=config.rk_tol if config.stop == "rk" else None)
        if config.stop == "gap" and f_star is None:
            raise UsageError("stop rule 'gap' needs a known or supplied f_star")
        rows = run_ntd(problem, x0, schedules, stop, config.seed,
                       f_star=f_star)

    if write:
        if config.out is None:
            raise UsageError("no output path configured")
        write_trace(config.out, rows, config.meta(f_star))
    return rows


def gap_at(rows: list[TraceRow], calls: int, f_ref: float) -> float | None:
    """Best value up to the call checkpoint, relative to the reference."""
    best = None
    for r in rows:
        if r.oracle_calls <= calls:
            best = r.f_best
        else:
            break
    return None if best is None else best - f_ref


@dataclass
class CompareResult:
    labels: list[str]
    checkpoints: list[int]
    gaps: list[list[float | None]]     # one row per checkpoint
    traces: list[list[TraceRow]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["oracle_calls," + ",".join(self.labels)]
        for c, row in zip(self.checkpoints, self.gaps):
            cells = ["" if g is None else repr(g) for g in row]
            lines.append(f"{c}," + ",".join(cells))
        return "\n".join(lines) + "\n"


def compare(configs: list[ExperimentConfig], checkpoints: list[int],
            jobs: int = 1) -> CompareResult:
    """Run several configurations on one objective and tabulate their gaps.

    All configurations must target the same problem family; each trace's
    gap uses its own optimal value when known, otherwise the pooled best
    value across all traces stands in for it.
    """
    if not configs:
        raise UsageError("nothing to compare")
    keys = {c.problem_key() for c in configs}
    if len(keys) > 1:
        raise UsageError(f"refusing to compare different problems: {sorted(keys)}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(
                lambda c: run_experiment(c, write=c.out is not None), configs))
    else:
        traces = [run_experiment(c, write=c.out is not None) for c in configs]

    f_stars = [c.resolve_f_star(c.build_problem()) for c in configs]
    pooled = min(min(r.f_best for r in rows) for rows in traces)
    refs = [fs if fs is not None else pooled for fs in f_stars]

    gaps = [[gap_at(rows, c, ref) for rows, ref in zip(traces, refs)]
            for c in checkpoints]
    return CompareResult(labels=[c.label() for c in configs],
                         checkpoints=list(checkpoints), gaps=gaps,
                         traces=traces)
