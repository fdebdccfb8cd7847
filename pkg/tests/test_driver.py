"""Line search, outer loop, stopping rules, and the optimality gap."""
import math

import numpy as np
import pytest

from ntdescent import (CountingOracle, LowerBoundProblem, RngStream,
                       RunState, ScaledProblem, Schedules, StoppingRule,
                       UVProblem, linesearch, ntd_step, optimality_gap,
                       run_ntd, sphere_point)
from helpers import per_iteration_values


class TestOptimalityGap:
    def test_single_pair(self):
        assert optimality_gap([(0.25, 0.6)]) == pytest.approx(0.36)

    def test_two_pairs(self):
        pairs = [(0.125, 0.3), (0.25, 0.26)]
        assert optimality_gap(pairs) == pytest.approx(0.125)

    def test_empty_is_infinite(self):
        assert math.isinf(optimality_gap([]))


class TestLinesearch:
    def test_single_index_zero_budget_unrolled(self):
        # G=1, T=0: sigma_0 = 1/2, the loops pass g through, and the sole
        # candidate is accepted exactly when it beats the anchor value
        problem = UVProblem()
        x = np.array([1.0, 0.2])
        f_x, g = problem.eval(x)
        s = np.linalg.norm(g)        # |g|/s = 1 >= 1/2: trust holds
        oracle = CountingOracle(problem)
        out = linesearch(oracle, x, g, s, G=1, T=0, rng=RngStream(0), f_x=f_x)
        assert out.candidates_evaluated == 1
        assert oracle.point_queries == 1
        step = x - 0.5 * g / np.linalg.norm(g)
        expected_moved = problem.eval(step)[0] < f_x
        assert out.moved == expected_moved
        if out.moved:
            np.testing.assert_allclose(out.x_next, step)
            assert out.chosen_sigma == 0.5

    def test_all_trust_regions_violated_keeps_anchor(self):
        problem = UVProblem()
        x = np.array([1.0, 0.2])
        f_x, g = problem.eval(x)
        oracle = CountingOracle(problem)
        # huge scale: sigma_0 = 1/2 > |v|/s immediately
        out = linesearch(oracle, x, g, s=1e9, G=1, T=0, rng=RngStream(0),
                         f_x=f_x)
        assert not out.moved
        assert out.candidates_evaluated == 0
        np.testing.assert_array_equal(out.x_next, x)
        assert out.chosen_sigma is None
        assert out.gap_estimate is None or out.gap_estimate > 0

    def test_interleaved_norms(self):
        problem = LowerBoundProblem(d=20, m=5)
        x = sphere_point(20, 3)
        f_x, g = problem.eval(x)
        oracle = CountingOracle(problem)
        out = linesearch(oracle, x, g, s=np.linalg.norm(g), G=8, T=8,
                         rng=RngStream(3), f_x=f_x)
        for gp in out.norm_trace:
            assert gp.v_out_norm <= gp.u_norm + 1e-12 * max(1.0, gp.u_norm)
            assert gp.u_norm <= gp.v_in_norm + 1e-12 * max(1.0, gp.v_in_norm)
        # the carried vector is nonincreasing across grid indices too
        vs = [gp.v_in_norm for gp in out.norm_trace]
        assert all(b <= a + 1e-12 * max(1.0, a) for a, b in zip(vs, vs[1:]))

    def test_trust_region_consistency_when_moved(self):
        problem = LowerBoundProblem(d=10, m=3)
        for seed in range(4):
            x = sphere_point(10, seed)
            f_x, g = problem.eval(x)
            s = max(np.linalg.norm(g), 1e-6)
            oracle = CountingOracle(problem)
            out = linesearch(oracle, x, g, s, G=6, T=6,
                             rng=RngStream(seed), f_x=f_x)
            if out.moved:
                assert out.chosen_sigma <= out.chosen_norm / s + 1e-12
                assert problem.eval(out.x_next)[0] <= f_x

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("problem_id", ["uv", "lb"])
    def test_early_break_equivalence(self, seed, problem_id):
        # disabling the trust-region shortcut must not change any step
        if problem_id == "uv":
            problem = UVProblem()
        else:
            problem = LowerBoundProblem(d=15, m=4)
        x0 = sphere_point(problem.dim, seed)

        def trajectory(early_break):
            sample = CountingOracle(problem).query(x0)
            state = RunState(k=0, x_k=x0, g_k=sample.subgradient,
                             f_k=sample.value,
                             s_lb=1e-6 * np.linalg.norm(sample.subgradient),
                             best_f=sample.value, best_x=x0)
            oracle = CountingOracle(problem)
            rng = RngStream(seed).substream(2)
            points = [x0]
            for _ in range(12):
                state, _ = ntd_step(state, Schedules(), oracle, rng,
                                    early_break=early_break)
                points.append(state.x_k)
            return points

        fast = trajectory(True)
        slow = trajectory(False)
        for a, b in zip(fast, slow):
            np.testing.assert_array_equal(a, b)

    def test_adaptive_extension_runs_and_descends(self):
        # far from the minimizer the whole dyadic grid can be trust-feasible;
        # the extension then probes sigma = 5, 50, ... until a violation
        problem = UVProblem()
        x = np.array([40.0, 30.0])
        f_x, g = problem.eval(x)
        oracle = CountingOracle(problem)
        out = linesearch(oracle, x, g, s=np.linalg.norm(g), G=3, T=3,
                         rng=RngStream(0), f_x=f_x, adaptive=True)
        sigmas = [gp.sigma for gp in out.norm_trace]
        assert any(s > 0.5 for s in sigmas)
        assert problem.eval(out.x_next)[0] <= f_x
        # cap respected
        oracle2 = CountingOracle(problem)
        out2 = linesearch(oracle2, x, g, s=np.linalg.norm(g), G=3, T=3,
                          rng=RngStream(0), f_x=f_x, adaptive=True,
                          adaptive_cap=6.0)
        assert max(gp.sigma for gp in out2.norm_trace) <= 6.0


class TestNtdStep:
    def test_strict_decrease_first_five_steps_on_uv(self):
        problem = UVProblem()
        x0 = np.array([1.0, 0.1])
        rows = run_ntd(problem, x0, Schedules(), StoppingRule(budget=2000),
                       seed=0, f_star=0.0)
        f_by_k = {k: v[0] for k, v in per_iteration_values(rows).items()}
        for k in range(5):
            assert f_by_k[k + 1] < f_by_k[k]

    def test_monotone_descent_exact(self):
        problem = LowerBoundProblem(d=30, m=6)
        rows = run_ntd(problem, sphere_point(30, 1), Schedules(),
                       StoppingRule(budget=5000), seed=1,
                       f_star=problem.known_optimum)
        f_by_k = {k: v[0] for k, v in per_iteration_values(rows).items()}
        ks = sorted(f_by_k)
        assert all(f_by_k[b] <= f_by_k[a] for a, b in zip(ks, ks[1:]))

    def test_call_budget_bound(self):
        # per outer step: at most 3*T*G loop calls + G candidates, plus the
        # initial sample
        problem = LowerBoundProblem(d=10, m=3)
        outcomes = []
        rows = run_ntd(problem, sphere_point(10, 0), Schedules(),
                       StoppingRule(budget=3000), seed=0,
                       f_star=problem.known_optimum,
                       collect_outcomes=outcomes)
        total = rows[-1].oracle_calls
        k_max = len(outcomes)
        bound = 1 + sum(3 * (k + 1) * min(k + 1, 54) + min(k + 1, 54) + 1
                        for k in range(k_max))
        assert total <= bound


class TestRunNtd:
    def test_zero_initial_subgradient_refused(self):
        problem = UVProblem()
        with pytest.raises(ValueError, match="zero"):
            run_ntd(problem, np.zeros(2), Schedules(),
                    StoppingRule(budget=100), seed=0)

    def test_exact_stationary_iterate_ends_the_run(self):
        # a problem whose subgradient vanishes on a whole region: once the
        # iterate lands there the run must terminate, not spin
        class FlatBeyondOne:
            dim = 1

            def eval(self, x):
                v = float(x[0])
                if v <= 1.0:
                    return 1.0, np.zeros(1)
                return (v - 1.0) ** 2 + 1.0, np.array([2.0 * (v - 1.0)])

        rows = run_ntd(FlatBeyondOne(), np.array([3.0]), Schedules(),
                       StoppingRule(budget=10 ** 9), seed=0)
        assert rows[-1].oracle_calls < 10 ** 5
        calls = [r.oracle_calls for r in rows]
        assert all(b > a for a, b in zip(calls, calls[1:]))

    def test_determinism(self):
        problem = LowerBoundProblem(d=12, m=4)
        x0 = sphere_point(12, 5)
        r1 = run_ntd(problem, x0, Schedules(), StoppingRule(budget=2000),
                     seed=5, f_star=problem.known_optimum)
        r2 = run_ntd(problem, x0, Schedules(), StoppingRule(budget=2000),
                     seed=5, f_star=problem.known_optimum)
        assert len(r1) == len(r2)
        for a, b in zip(r1, r2):
            assert a.oracle_calls == b.oracle_calls
            assert a.k == b.k
            assert (a.f_current == b.f_current
                    or (np.isnan(a.f_current) and np.isnan(b.f_current)))
            assert a.f_best == b.f_best
            assert a.sigma == b.sigma
            assert a.r_k == b.r_k

    def test_budget_stop_with_bounded_overshoot(self):
        problem = LowerBoundProblem(d=10, m=3)
        outcomes = []
        rows = run_ntd(problem, sphere_point(10, 2), Schedules(),
                       StoppingRule(budget=500), seed=2,
                       f_star=problem.known_optimum,
                       collect_outcomes=outcomes)
        final = rows[-1].oracle_calls
        assert final >= 500
        # overshoot bounded by the last sweep's own cost
        k_last = len(outcomes) - 1
        last_cost = 3 * (k_last + 1) * min(k_last + 1, 54) + min(k_last + 1, 54)
        assert final <= 500 + last_cost

    def test_rk_stop_rule(self):
        problem = UVProblem()
        rows = run_ntd(problem, np.array([1.0, 0.1]), Schedules(),
                       StoppingRule(budget=10 ** 6, rk_tol=1e-4), seed=0,
                       f_star=0.0)
        r_ks = [r.r_k for r in rows if r.r_k is not None]
        assert r_ks[-1] <= 1e-4
        assert rows[-1].oracle_calls < 10 ** 6

    def test_gap_stop_rule(self):
        problem = LowerBoundProblem(d=20, m=5)
        rows = run_ntd(problem, sphere_point(20, 0), Schedules(),
                       StoppingRule(budget=10 ** 6, target_gap=1e-4), seed=0,
                       f_star=problem.known_optimum)
        assert rows[-1].f_best - problem.known_optimum <= 1e-4
        assert rows[-1].oracle_calls < 10 ** 6

    def test_f_best_nonincreasing_and_calls_increasing(self):
        problem = LowerBoundProblem(d=15, m=5)
        rows = run_ntd(problem, sphere_point(15, 3), Schedules(),
                       StoppingRule(budget=3000), seed=3,
                       f_star=problem.known_optimum)
        for a, b in zip(rows, rows[1:]):
            assert b.oracle_calls > a.oracle_calls
            assert b.f_best <= a.f_best


class TestScalingInvariance:
    def test_trajectory_invariant_under_objective_scaling(self):
        base = UVProblem()
        doubled = ScaledProblem(base, 2.0)
        x0 = np.array([1.0, 0.1])

        def iterates(problem):
            sample = CountingOracle(problem).query(x0)
            state = RunState(k=0, x_k=x0, g_k=sample.subgradient,
                             f_k=sample.value,
                             s_lb=1e-6 * np.linalg.norm(sample.subgradient),
                             best_f=sample.value, best_x=x0)
            oracle = CountingOracle(problem)
            rng = RngStream(0).substream(2)
            pts = []
            for _ in range(20):
                state, _ = ntd_step(state, Schedules(), oracle, rng)
                pts.append(state.x_k.copy())
            return pts

        for a, b in zip(iterates(base), iterates(doubled)):
            assert np.linalg.norm(a - b) <= 1e-9
