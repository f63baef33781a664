"""Experiment harness: baseline, sweep, hybrid, verify and gen-graph commands.

All outputs are deterministic for a fixed configuration: CSV/JSON files embed
the config hash and tool version, floats are serialized with 17 significant
digits, and the `seconds` column reports a machine-independent work proxy
(RK4 sub-steps / 1e6) rather than wall clock, which goes to the console
instead. Exit codes: 0 success, 1 run failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, config_hash, format_value, load_config_file, resolve_config, serialize_config
from .problems import Graph, random_graph, read_graph, serialize_graph, write_graph
from .selection import SweepResult, exhaustive_depth_baseline, run_lambda_sweep
from .verify import run_all

WORK_UNIT = 1e6  # RK4 sub-steps per nominal "second" in CSV output


def _shared_flags(parser: argparse.ArgumentParser) -> None:
    add = parser.add_argument
    add("--config", metavar="PATH", help="flat key=value config file")
    add("--graph", metavar="PATH", help="graph file (overrides the generator fields)")
    add("--seed", type=int, help="seed for graph generation")
    add("--noise", choices=("none", "relaxation", "dephasing"))
    add("--coupling", type=float, help="uniform per-qubit coupling strength")
    add("--p", type=int, help="schedule pair count (sweep/hybrid start; baseline upper end)")
    add("--p-min", dest="p_min", type=int, help="baseline lower end of the depth range")
    add("--eta", type=float, help="gradient step size")
    add("--epsilon", type=float, help="finite-difference perturbation")
    add("--iters", type=int, help="optimizer iterations")
    add("--lambda-init", dest="lambda_init", type=float)
    add("--lambda-factor", dest="lambda_factor", type=float)
    add("--rounds", type=int, help="maximum sweep rounds")
    add("--plateau-tol", dest="plateau_tol", type=float)
    add("--scale", type=float, help="factor applied to both Hamiltonians")
    add("--dt", type=float, help="RK4 integration step")
    add("--out", metavar="DIR", help="output directory")
    add("--jobs", type=int, help="parallel independent runs (sweep arms, baseline depths)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoadepth", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qaoadepth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("baseline", "unregularized descent for every depth in p_min..p"),
        ("sweep", "lambda sweep of the regularized optimizer at fixed initial depth"),
        ("hybrid", "sweep with prune-then-refine arms"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _shared_flags(cmd)
        if name == "hybrid":
            cmd.add_argument("--pg-iters", dest="pg_iters", type=int, help="regularized phase iterations")
            cmd.add_argument("--refine-iters", dest="refine_iters", type=int, help="vanilla phase iterations")

    ver = sub.add_parser("verify", help="run the invariant suite and print a pass/fail table")
    _shared_flags(ver)

    gen = sub.add_parser("gen-graph", help="generate a seeded random Max-Cut instance")
    _shared_flags(gen)
    gen.add_argument("--nodes", type=int)
    gen.add_argument("--edges", type=int)
    gen.add_argument("--weight-min", dest="weight_min", type=float)
    gen.add_argument("--weight-max", dest="weight_max", type=float)
    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    return resolve_config(file_values, overrides)


def _prepare_out(config: RunConfig) -> tuple[Path, str]:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(config)
    with open(out / "config.resolved", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_config(config))
    return out, digest


def _load_instance(config: RunConfig, out: Path | None) -> Graph:
    if config.graph:
        return read_graph(config.graph)
    graph = random_graph(config.nodes, config.edges, (config.weight_min, config.weight_max), config.seed)
    if out is not None:
        write_graph(graph, out / "graph.txt")
    return graph


def _write_table(path: Path, digest: str, header: str, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# qaoadepth {__version__}\n")
        fh.write(f"# config_hash: {digest}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _json_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{value:.17g}" if math.isfinite(value) else "null"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{_json_value(k)}: {_json_value(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"cannot serialize {type(value)}")


def _write_sweep_json(path: Path, digest: str, sweep: SweepResult) -> None:
    records = [
        {
            "lambda": r.lam,
            "x_final": list(r.final_x),
            "selected_params": r.selected_params,
            "effective_depth": r.effective_depth,
            "ratio": r.ratio,
            **({"phase2_ratio": r.phase2_ratio} if r.phase2_ratio is not None else {}),
            "failed": r.failed,
        }
        for r in sweep.records
    ]
    doc = {"version": __version__, "config_hash": digest, "records": records}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_json_value(doc) + "\n")


def _clamp(ratio: float) -> float:
    return min(max(ratio, 0.0), 1.0)


def cmd_baseline(config: RunConfig) -> int:
    out, digest = _prepare_out(config)
    graph = _load_instance(config, out)
    depths = list(range(config.p_min, config.p + 1))
    if not depths:
        raise ConfigError(f"empty range: p_min={config.p_min} > p={config.p}")
    started = time.perf_counter()
    records = exhaustive_depth_baseline(
        graph, config.noise_model(), config.optimizer(), depths,
        scale=config.scale, integrator=config.integrator(), jobs=config.jobs,
    )
    elapsed = time.perf_counter() - started
    rows = [
        f"{r.p},{r.n_params},{format_value(r.ratio)},{format_value(r.objective)},{format_value(r.rk4_steps / WORK_UNIT)}"
        for r in records
    ]
    _write_table(out / "baseline.csv", digest, "p,params,ratio,objective,seconds", rows)
    best = max(records, key=lambda r: r.ratio)
    print(f"baseline: wrote {out / 'baseline.csv'} ({elapsed:.1f}s wall)")
    print(f"best depth p={best.p} ({best.n_params} params) ratio={_clamp(best.ratio):.4f}")
    return 0


def _sweep_rows(sweep: SweepResult, with_phase2: bool) -> list[str]:
    rows = []
    for k, r in enumerate(sweep.records):
        stopped = "true" if sweep.stopped_early_at == k else "false"
        row = (
            f"{format_value(r.lam)},{r.selected_params},{r.effective_depth},"
            f"{format_value(r.ratio)},{stopped}"
        )
        if with_phase2:
            row += f",{format_value(r.phase2_ratio if r.phase2_ratio is not None else math.nan)}"
        rows.append(row)
    return rows


def _run_sweep_command(config: RunConfig, hybrid: bool) -> int:
    out, digest = _prepare_out(config)
    graph = _load_instance(config, out)
    x0 = np.full(2 * config.p, 0.1)
    started = time.perf_counter()
    sweep = run_lambda_sweep(
        graph, config.noise_model(), x0, config.optimizer(hybrid=hybrid), config.lambda_schedule(),
        scale=config.scale, integrator=config.integrator(), jobs=config.jobs,
    )
    elapsed = time.perf_counter() - started
    name = "hybrid" if hybrid else "sweep"
    header = "lambda,selected_params,effective_depth,ratio,stopped_early"
    if hybrid:
        header += ",phase2_ratio"
    _write_table(out / f"{name}.csv", digest, header, _sweep_rows(sweep, hybrid))
    _write_sweep_json(out / f"{name}.json", digest, sweep)
    print(f"{name}: wrote {out / (name + '.csv')} and {out / (name + '.json')} ({elapsed:.1f}s wall)")
    if sweep.best_index is None:
        print("all sweep arms failed", file=sys.stderr)
        return 1
    best = sweep.best
    print(
        f"chosen lambda={best.lam:.6g}: {best.selected_params} params, "
        f"effective depth {best.effective_depth}, ratio={_clamp(best.score):.4f}"
    )
    return 0


def cmd_sweep(config: RunConfig) -> int:
    return _run_sweep_command(config, hybrid=False)


def cmd_hybrid(config: RunConfig) -> int:
    return _run_sweep_command(config, hybrid=True)


def cmd_verify(config: RunConfig) -> int:
    results = run_all(step=config.dt)
    width = max(len(name) for name, _, _ in results)
    failures = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        print(f"{name:<{width}}  {status}  {detail}")
    print(f"{failures} of {len(results)} checks failed" if failures else f"all {len(results)} checks passed")
    return 1 if failures else 0


def cmd_gen_graph(config: RunConfig) -> int:
    graph = random_graph(config.nodes, config.edges, (config.weight_min, config.weight_max), config.seed)
    if config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "graph.txt"
        write_graph(graph, path)
        print(f"wrote {path}")
    else:
        sys.stdout.write(serialize_graph(graph))
    return 0


COMMANDS = {
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "hybrid": cmd_hybrid,
    "verify": cmd_verify,
    "gen-graph": cmd_gen_graph,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
