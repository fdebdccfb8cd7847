"""Shared test utilities: trace digestion and least-squares fits."""
from __future__ import annotations

import numpy as np


def per_iteration_values(rows):
    """Map outer iteration -> (f_current, r_k) from a trace."""
    values = {}
    for r in rows:
        if r.k >= 0 and not np.isnan(r.f_current):
            values[r.k] = (r.f_current, r.r_k)
    return values


def gap_by_iteration(rows, f_star):
    vals = per_iteration_values(rows)
    return {k: v[0] - f_star for k, v in vals.items()}


def loglinear_tail_fit(gaps: dict[int, float], fraction: float = 1 / 3):
    """Slope and R^2 of log(gap) vs k over the trailing fraction.

    Iterations with nonpositive gap (converged to machine level) are
    excluded from the fit.
    """
    ks = sorted(gaps)
    tail = ks[int(len(ks) * (1 - fraction)):]
    xs = np.array([k for k in tail if gaps[k] > 0], dtype=float)
    ys = np.log([gaps[k] for k in tail if gaps[k] > 0])
    if len(xs) < 3:
        raise AssertionError(f"too few positive-gap tail points ({len(xs)})")
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, r2


def calls_to_gap(rows, f_star, target):
    """First cumulative call count at which the best gap reaches the target."""
    for r in rows:
        if r.f_best - f_star <= target:
            return r.oracle_calls
    return None
