"""Experiment harness: CSV schema, determinism, compare, CLI, figures."""
import pytest

from ntdescent import (ExperimentConfig, TraceRow, UsageError, compare,
                       read_trace, run_experiment, write_trace)
from ntdescent.cli import main
from ntdescent.harness import gap_at


def lb_config(tmp_path, algo="ntd", seed=0, budget=800, name="t.csv", **kw):
    return ExperimentConfig(problem="lb", algo=algo, seed=seed, budget=budget,
                            dim=12, m=4, out=str(tmp_path / name), **kw)


class TestTraceCsv:
    def test_schema_round_trips(self, tmp_path):
        rows = [
            TraceRow(oracle_calls=1, k=0, f_current=1.5, f_best=1.5,
                     gap_best=0.5, wall_ns=10),
            TraceRow(oracle_calls=7, k=1, f_current=1.25, f_best=1.1,
                     gap_best=0.1, sigma=0.25, step_kind="accepted",
                     r_k=0.03, wall_ns=999),
        ]
        path = tmp_path / "trace.csv"
        write_trace(path, rows, {"problem": "lb", "algo": "ntd", "seed": 0})
        back, meta = read_trace(path)
        assert meta["problem"] == "lb"
        assert meta["seed"] == "0"
        assert [r.__dict__ for r in back] == [r.__dict__ for r in rows]

    def test_header_line(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace(path, [], {})
        assert path.read_text().startswith(
            "oracle_calls,k,f_current,f_best,gap_best,sigma,step_kind,R_k,wall_ns")


class TestRunExperiment:
    def test_monotone_best_and_schema(self, tmp_path):
        config = lb_config(tmp_path)
        rows = run_experiment(config)
        back, meta = read_trace(config.out)
        assert meta["algo"] == "ntd"
        bests = [r.f_best for r in back]
        assert all(b <= a for a, b in zip(bests, bests[1:]))
        calls = [r.oracle_calls for r in back]
        assert all(b > a for a, b in zip(calls, calls[1:]))
        assert len(back) == len(rows)

    def test_reruns_identical_up_to_wall_time(self, tmp_path):
        c1 = lb_config(tmp_path, name="a.csv")
        c2 = lb_config(tmp_path, name="b.csv")
        run_experiment(c1)
        run_experiment(c2)

        def strip_wall(path):
            return ["," .join(line.split(",")[:-1])
                    for line in open(path).read().splitlines()]

        assert strip_wall(c1.out) == strip_wall(c2.out)

    def test_polyak_needs_optimum_on_eig(self, tmp_path):
        config = ExperimentConfig(problem="eig", algo="polyak", seed=0,
                                  budget=50, N=5, K=2,
                                  out=str(tmp_path / "e.csv"))
        with pytest.raises(UsageError, match="fstar"):
            run_experiment(config)

    def test_polyak_runs_with_supplied_optimum(self, tmp_path):
        config = ExperimentConfig(problem="eig", algo="polyak", seed=0,
                                  budget=50, N=5, K=2, f_star=-10.0,
                                  out=str(tmp_path / "e.csv"))
        rows = run_experiment(config)
        assert rows[-1].oracle_calls >= 50

    def test_unknown_ids_rejected(self, tmp_path):
        with pytest.raises(UsageError):
            ExperimentConfig(problem="nope", algo="ntd", seed=0, budget=10)
        with pytest.raises(UsageError):
            ExperimentConfig(problem="lb", algo="nope", seed=0, budget=10)
        with pytest.raises(UsageError):
            ExperimentConfig(problem="lb", algo="ntd", seed=0, budget=0)


class TestCompare:
    def test_two_traces_three_checkpoints(self, tmp_path):
        configs = [lb_config(tmp_path, algo="ntd", name="a.csv"),
                   lb_config(tmp_path, algo="polyak", name="b.csv")]
        result = compare(configs, [100, 300, 800])
        assert len(result.gaps) == 3
        assert len(result.labels) == 2
        csv_text = result.to_csv()
        assert csv_text.splitlines()[0].startswith("oracle_calls,")
        assert len(csv_text.splitlines()) == 4

    def test_gap_uses_known_optimum(self, tmp_path):
        configs = [lb_config(tmp_path, name="a.csv")]
        result = compare(configs, [800])
        expected = gap_at(result.traces[0], 800, -1.0 / 8.0)
        assert result.gaps[0][0] == pytest.approx(expected)

    def test_pooled_reference_when_optimum_unknown(self, tmp_path):
        configs = [ExperimentConfig(problem="eig", algo="ntd", seed=s,
                                    budget=150, N=5, K=2,
                                    out=str(tmp_path / f"e{s}.csv"))
                   for s in (0, 1)]
        result = compare(configs, [150])
        pooled = min(min(r.f_best for r in rows) for rows in result.traces)
        for rows, g in zip(result.traces, result.gaps[0]):
            assert g == pytest.approx(
                [r.f_best for r in rows if r.oracle_calls <= 150][-1] - pooled)

    def test_varying_dimension_within_family(self, tmp_path):
        # fixed m, varying d: the dimension-independence protocol
        configs = [ExperimentConfig(problem="lb", algo="ntd", seed=0,
                                    budget=400, dim=d, m=4,
                                    out=str(tmp_path / f"d{d}.csv"))
                   for d in (10, 20, 40)]
        result = compare(configs, [200, 400])
        assert len(result.labels) == 3
        assert all(g is not None for row in result.gaps for g in row)

    def test_mismatched_problems_refused(self, tmp_path):
        configs = [lb_config(tmp_path, name="a.csv"),
                   ExperimentConfig(problem="uv", algo="ntd", seed=0,
                                    budget=100, out=str(tmp_path / "u.csv"))]
        with pytest.raises(UsageError, match="different problems"):
            compare(configs, [100])

    def test_parallel_jobs_match_serial(self, tmp_path):
        serial = compare([lb_config(tmp_path, seed=s, name=f"s{s}.csv")
                          for s in (0, 1)], [500], jobs=1)
        parallel = compare([lb_config(tmp_path, seed=s, name=f"p{s}.csv")
                            for s in (0, 1)], [500], jobs=2)
        assert serial.gaps == parallel.gaps


class TestCli:
    def test_run_and_plot(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        fig = tmp_path / "t.png"
        code = main(["run", "--problem", "lb", "--dim", "12", "--m", "4",
                     "--algo", "ntd", "--seed", "0", "--budget", "400",
                     "--out", str(out), "--plot", str(fig)])
        assert code == 0
        assert out.exists()
        assert fig.exists() and fig.stat().st_size > 1000
        rows, meta = read_trace(out)
        assert meta["problem"] == "lb"
        bests = [r.f_best for r in rows]
        assert all(b <= a for a, b in zip(bests, bests[1:]))

    def test_usage_error_exit_code(self, tmp_path, capsys):
        code = main(["run", "--problem", "eig", "--N", "5", "--K", "2",
                     "--algo", "polyak", "--budget", "50",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "fstar" in capsys.readouterr().err

    def test_io_error_exit_code(self, tmp_path, capsys):
        code = main(["run", "--problem", "lb", "--dim", "8", "--m", "2",
                     "--algo", "ntd", "--budget", "50",
                     "--out", "/nonexistent-dir/x.csv"])
        assert code == 3

    def test_verify_gi_exit_zero(self, capsys):
        code = main(["verify", "gi", "--samples", "150", "--seed", "0"])
        assert code == 0
        assert "gradient-inequality" in capsys.readouterr().out

    def test_verify_fd_single_problem(self, capsys):
        code = main(["verify", "fd", "--problem", "uv", "--points", "40"])
        assert code == 0

    def test_verify_violation_exit_code(self, capsys, monkeypatch):
        from ntdescent import cli
        from ntdescent.verify import Report

        def rigged(**kwargs):
            r = Report("gradient-inequality")
            r.record(False, "synthetic violation")
            return r

        monkeypatch.setattr(cli, "verify_gi", rigged)
        code = main(["verify", "gi", "--samples", "10"])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out

    def test_bad_flag_value_is_usage_error(self, capsys):
        # the model-instance constants reject radii beyond their validity
        code = main(["verify", "gi", "--samples", "10", "--radius", "0.9"])
        assert code == 2

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("problem=lb\ndim=12\nm=4\nalgo=ntd\nseed=3\n"
                       f"budget=200\nout={tmp_path/'c.csv'}\n")
        code = main(["run", "--config", str(cfg), "--budget", "300"])
        assert code == 0
        rows, meta = read_trace(tmp_path / "c.csv")
        assert meta["seed"] == "3"
        assert rows[-1].oracle_calls >= 300   # flag overrode the file

    def test_external_matrix_for_eig(self, tmp_path):
        import numpy as np
        rng = np.random.default_rng(3)
        B = rng.normal(size=(5, 5))
        A = B @ B.T
        mat = tmp_path / "A.txt"
        body = "\n".join(" ".join(repr(float(v)) for v in row) for row in A)
        mat.write_text(f"5 5\n{body}\n")
        out = tmp_path / "eig.csv"
        code = main(["run", "--problem", "eig", "--N", "5", "--K", "2",
                     "--matrix", str(mat), "--algo", "ntd",
                     "--budget", "200", "--out", str(out)])
        assert code == 0
        rows, _ = read_trace(out)
        assert rows[-1].oracle_calls >= 200

    def test_env_seed_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NTD_SEED", "11")
        out = tmp_path / "env.csv"
        code = main(["run", "--problem", "lb", "--dim", "12", "--m", "4",
                     "--algo", "ntd", "--budget", "200", "--out", str(out)])
        assert code == 0
        _, meta = read_trace(out)
        assert meta["seed"] == "11"

    def test_compare_command(self, tmp_path):
        c1 = tmp_path / "a.cfg"
        c1.write_text("problem=lb\ndim=12\nm=4\nalgo=ntd\nseed=0\nbudget=400\n")
        c2 = tmp_path / "b.cfg"
        c2.write_text("problem=lb\ndim=12\nm=4\nalgo=polyak\nseed=0\nbudget=400\n")
        out = tmp_path / "summary.csv"
        fig = tmp_path / "summary.png"
        code = main(["compare", str(c1), str(c2),
                     "--checkpoints", "100,400", "--out", str(out),
                     "--plot", str(fig)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        assert fig.exists() and fig.stat().st_size > 1000

    def test_plot_from_trace_files(self, tmp_path):
        out = tmp_path / "t.csv"
        main(["run", "--problem", "lb", "--dim", "12", "--m", "4",
              "--algo", "ntd", "--budget", "300", "--out", str(out)])
        fig = tmp_path / "fig.png"
        code = main(["plot", str(out), "--out", str(fig)])
        assert code == 0
        assert fig.exists() and fig.stat().st_size > 1000
