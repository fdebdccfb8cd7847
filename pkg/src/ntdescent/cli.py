"""Command line entry point: ntd run | compare | verify | plot.

Exit codes: 0 success, 1 verification violation, 2 usage error, 3 I/O
error.  The environment variable NTD_SEED supplies the default seed.
Configuration can come from flags or a flat key=value file via --config;
flags override the file.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .harness import (ALGO_IDS, PROBLEM_IDS, STOP_KINDS, CompareResult,
                      ExperimentConfig, UsageError, compare, run_experiment)
from .trace import read_trace
from .verify import verify_fd_all, verify_fd, verify_gi, verify_invariants

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _default_seed() -> int:
    return int(os.environ.get("NTD_SEED", "0"))


def load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"bad config line (expected key=value): {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


_CONFIG_FIELDS = {
    "problem": str, "algo": str, "seed": int, "budget": int, "out": str,
    "dim": int, "m": int, "N": int, "K": int, "r_star": int, "r": int,
    "matrix": str, "c0": float, "adaptive": lambda s: s.lower() in ("1", "true", "yes"),
    "adaptive_cap": float, "f_star": float, "stop": str,
    "target_gap": float, "rk_tol": float, "x0_scale": float,
}


def build_config(file_values: dict[str, str],
                 flag_values: dict) -> ExperimentConfig:
    kwargs: dict = {}
    for key, conv in _CONFIG_FIELDS.items():
        if key in file_values:
            kwargs[key] = conv(file_values[key])
    for key, value in flag_values.items():
        if value is not None:
            kwargs[key] = value
    unknown = set(file_values) - set(_CONFIG_FIELDS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    kwargs.setdefault("seed", _default_seed())
    if "problem" not in kwargs:
        raise UsageError("a problem id is required (--problem)")
    if "algo" not in kwargs:
        raise UsageError("an algorithm id is required (--algo)")
    if "budget" not in kwargs:
        raise UsageError("an oracle budget is required (--budget)")
    return ExperimentConfig(**kwargs)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--problem", choices=PROBLEM_IDS)
    p.add_argument("--algo", choices=ALGO_IDS)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, help="max oracle calls")
    p.add_argument("--out", help="trace CSV path")
    p.add_argument("--dim", type=int, help="ambient dimension (lb, mos)")
    p.add_argument("--m", type=int, help="number of max terms (lb, mos)")
    p.add_argument("--N", type=int, help="matrix side (qs, eig)")
    p.add_argument("--K", type=int, help="eigenvalues in the product (eig)")
    p.add_argument("--rstar", dest="r_star", type=int,
                   help="planted rank (qs)")
    p.add_argument("--r", type=int, help="decision rank (qs)")
    p.add_argument("--matrix", help="external data matrix file (eig)")
    p.add_argument("--c0", type=float, help="trust-region scale floor")
    p.add_argument("--adaptive", action="store_const", const=True,
                   default=None, help="enable the growing-sigma extension")
    p.add_argument("--adaptive-cap", dest="adaptive_cap", type=float)
    p.add_argument("--fstar", dest="f_star", type=float,
                   help="optimal value (required for polyak on eig)")
    p.add_argument("--stop", choices=STOP_KINDS)
    p.add_argument("--target-gap", dest="target_gap", type=float)
    p.add_argument("--rk-tol", dest="rk_tol", type=float)
    p.add_argument("--x0-scale", dest="x0_scale", type=float)
    p.add_argument("--plot", help="also render the trace figure to this file")


def _config_from_args(args) -> ExperimentConfig:
    file_values = load_config_file(args.config) if args.config else {}
    flag_values = {k: getattr(args, k) for k in _CONFIG_FIELDS if hasattr(args, k)}
    return build_config(file_values, flag_values)


def cmd_run(args) -> int:
    config = _config_from_args(args)
    if config.out is None:
        raise UsageError("an output path is required (--out)")
    rows = run_experiment(config)
    print(f"wrote {config.out} ({len(rows)} rows, "
          f"{rows[-1].oracle_calls} oracle calls)")
    if args.plot:
        from .figures import plot_traces
        f_ref = config.resolve_f_star(config.build_problem())
        plot_traces([(rows, config.label())], args.plot, f_ref=f_ref)
        print(f"wrote {args.plot}")
    return EXIT_OK


def _parse_checkpoints(text: str) -> list[int]:
    try:
        points = [int(float(tok)) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad checkpoint list {text!r}") from exc
    if not points:
        raise UsageError("empty checkpoint list")
    return points


def cmd_compare(args) -> int:
    configs = []
    for path in args.configs:
        configs.append(build_config(load_config_file(path), {}))
    checkpoints = _parse_checkpoints(args.checkpoints)
    result: CompareResult = compare(configs, checkpoints, jobs=args.jobs)
    csv_text = result.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv_text)
    if args.plot:
        from .figures import plot_compare
        plot_compare(result.labels, result.checkpoints, result.gaps, args.plot)
        print(f"wrote {args.plot}")
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    reports = []
    if args.suite == "gi":
        reports.append(verify_gi(samples=args.samples, seed=seed,
                                 radius=args.radius))
    elif args.suite == "invariants":
        reports.append(verify_invariants(seed=seed))
    else:  # fd
        if args.problem == "all":
            reports.extend(verify_fd_all(seed=seed, points=args.points))
        else:
            reports.append(verify_fd(args.problem, seed=seed,
                                     points=args.points))
    lines: list[str] = []
    for r in reports:
        lines.extend(r.lines())
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_VIOLATION


def cmd_plot(args) -> int:
    from .figures import plot_traces
    traces = []
    f_ref = args.fstar
    for path in args.traces:
        rows, meta = read_trace(path)
        label = meta.get("problem", Path(path).stem) + "-" + meta.get("algo", "")
        if f_ref is None and "f_star" in meta:
            f_ref = float(meta["f_star"])
        traces.append((rows, label))
    plot_traces(traces, args.out, f_ref=f_ref)
    print(f"wrote {args.out}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ntd",
        description="Minimal-norm subgradient descent: runs, baselines, "
                    "comparisons, and theory verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment to a trace CSV")
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run several configs and tabulate gaps")
    p_cmp.add_argument("configs", nargs="+", help="key=value config files")
    p_cmp.add_argument("--checkpoints", default="1e3,1e4,1e5",
                       help="comma-separated oracle-call checkpoints")
    p_cmp.add_argument("--out", help="summary CSV path (default stdout)")
    p_cmp.add_argument("--plot", help="render the summary figure here")
    p_cmp.add_argument("--jobs", type=int, default=1)
    p_cmp.set_defaults(func=cmd_compare)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    ver_sub = p_ver.add_subparsers(dest="suite", required=True)
    p_gi = ver_sub.add_parser("gi", help="gradient-inequality experiment")
    p_gi.add_argument("--samples", type=int, default=1000)
    p_gi.add_argument("--seed", type=int, default=None)
    p_gi.add_argument("--radius", type=float, default=0.25)
    p_gi.add_argument("--out", help="write the report here as well")
    p_inv = ver_sub.add_parser("invariants", help="structural invariants")
    p_inv.add_argument("--seed", type=int, default=None)
    p_inv.add_argument("--out")
    p_fd = ver_sub.add_parser("fd", help="finite-difference oracle checks")
    p_fd.add_argument("--problem", default="all",
                      choices=PROBLEM_IDS + ("all",))
    p_fd.add_argument("--seed", type=int, default=None)
    p_fd.add_argument("--points", type=int, default=100)
    p_fd.add_argument("--out")
    p_ver.set_defaults(func=cmd_verify)

    p_plot = sub.add_parser("plot", help="render trace CSVs to a figure")
    p_plot.add_argument("traces", nargs="+")
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--fstar", type=float, default=None)
    p_plot.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ntd: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # contract violations reached from flag values are usage errors here
        print(f"ntd: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ntd: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
