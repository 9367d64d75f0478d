"""Command-line front end.

Four subcommands: ``solve`` a standalone allocation instance, ``simulate`` a
scenario, ``analyze`` the closed-form model, and ``sweep`` a parameter axis.
Exit codes: 0 success, 1 validation problem (bad config or instance), 2
runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional

from .allocator import (
    InstanceParseError,
    InstanceTooLargeError,
    parse_instance,
    solve_bruteforce,
    solve_dp,
)
from .analysis import (
    expected_burst_time,
    expected_packets,
    expected_rate,
    expected_throughput,
    gamma,
    rate_probabilities,
)
from .config import ConfigError, ScenarioConfig, load_config
from .simulator import (
    TRACE_COLUMNS,
    metrics_csv_rows,
    rate_gain_table,
    run,
    run_traced,
    sweep,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _write_lines(path: Optional[str], lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(args: argparse.Namespace) -> int:
    try:
        with open(args.instance, "r", encoding="utf-8") as fh:
            problem = parse_instance(fh.read())
    except OSError as exc:
        print(f"error: cannot read instance: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InstanceParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    allocation = solve_dp(problem)
    lines = [
        f"channels {problem.m_channels}",
        f"rates_per_channel {problem.q_rates}",
        f"total_rate_bps {_fmt(allocation.total_rate)}",
        f"total_power_w {_fmt(allocation.total_power)}",
    ]
    for m, choice in enumerate(allocation.choices):
        if choice is None:
            lines.append(f"channel {m}: skip")
        else:
            lines.append(
                f"channel {m}: rate_index {choice}"
                f" rate_bps {_fmt(problem.rate_matrix[m][choice])}"
                f" power_w {_fmt(allocation.powers[m])}"
            )
    if args.oracle:
        try:
            reference = solve_bruteforce(problem)
        except InstanceTooLargeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        agree = reference.total_rate == allocation.total_rate
        lines.append(f"oracle_total_rate_bps {_fmt(reference.total_rate)}")
        lines.append(f"oracle_agrees {'yes' if agree else 'no'}")
        if not agree:
            _write_lines(args.out, lines)
            return EXIT_RUNTIME
    _write_lines(args.out, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _load_scenario(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
        cfg.validate()
    return cfg


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = _load_scenario(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.trace:
        metrics, trace = run_traced(cfg)
        trace_path = (args.out or "metrics.csv") + ".trace"
        rows = [",".join(TRACE_COLUMNS)]
        rows += [",".join(_fmt(v) for v in row) for row in trace]
        _write_lines(trace_path, rows)
    else:
        metrics = run(cfg)
    _write_lines(args.out, metrics_csv_rows([metrics]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        cfg = _load_scenario(args)
        scenario = cfg.analysis_scenario()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    q = scenario.table.q_count
    header = ["channel", "gamma"] + [f"p_rate{i}" for i in range(q + 1)] + [
        "e_rate_bps", "e_packets", "e_burst_s", "e_throughput_bps",
    ]
    e_rate = expected_rate(scenario)
    e_n = expected_packets(scenario)
    e_t = expected_burst_time(scenario)
    e_psi = expected_throughput(scenario)
    lines = [",".join(header)]
    for m in range(scenario.m_channels):
        probs = rate_probabilities(scenario, m)
        row = [str(m), _fmt(gamma(scenario, m))]
        row += [_fmt(p) for p in probs]
        row += [_fmt(e_rate), str(e_n), _fmt(e_t), _fmt(e_psi)]
        lines.append(",".join(row))
    _write_lines(args.out, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_PLOT_TEMPLATE = '''\
#!/usr/bin/env python3
"""Plot the sweep CSV next to this script (any matplotlib will do)."""
import csv
import sys

import matplotlib.pyplot as plt

CSV = {csv_path!r}
X = {x_col!r}
Y = {y_col!r}
SERIES = {series_col!r}

rows = list(csv.DictReader(open(CSV)))
series = sorted({{r[SERIES] for r in rows}})
for s in series:
    pts = [(float(r[X]), float(r[Y])) for r in rows if r[SERIES] == s]
    pts.sort()
    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{{SERIES}}={{s}}")
plt.xlabel(X)
plt.ylabel(Y)
plt.legend()
plt.grid(True)
out = CSV + ".png"
plt.savefig(out, dpi=150)
print("wrote", out)
'''


def _plot_script(kind: str, csv_path: str) -> str:
    if kind == "rate_gain":
        return _PLOT_TEMPLATE.format(
            csv_path=csv_path, x_col="distance_m", y_col="rate_gain",
            series_col="m_channels",
        )
    if kind == "interference":
        return _PLOT_TEMPLATE.format(
            csv_path=csv_path, x_col="channels", y_col="avg_node_throughput_bps",
            series_col="interference_w",
        )
    return _PLOT_TEMPLATE.format(
        csv_path=csv_path, x_col="flows", y_col="network_throughput_bps",
        series_col="strategy",
    )


def sweep_configs(cfg: ScenarioConfig) -> list[ScenarioConfig]:
    """Expand the sweep axis into per-point run configs (order-stable)."""
    spec = cfg.sweep
    configs = []
    if spec.kind == "interference":
        for m in spec.channel_counts:
            for level in spec.interference_w:
                for seed in spec.seeds:
                    configs.append(
                        replace(
                            cfg,
                            scenario_id=f"int_{level:g}_m{m}_s{seed}",
                            n_channels=m,
                            interference_w=level,
                            seed=seed,
                            sweep=None,
                        )
                    )
    elif spec.kind == "flows":
        for strategy in spec.strategies:
            for flows in spec.flow_counts:
                for seed in spec.seeds:
                    configs.append(
                        replace(
                            cfg,
                            scenario_id=f"{strategy}_f{flows}_s{seed}",
                            strategy=strategy,
                            flows=flows,
                            seed=seed,
                            sweep=None,
                        )
                    )
    for c in configs:
        c.validate()
    return configs


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        cfg = _load_scenario(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if cfg.sweep is None:
        print("error: config has no [sweep] section", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if cfg.sweep.kind == "rate_gain":
            rows = rate_gain_table(cfg, cfg.sweep.distances_m, cfg.sweep.channel_counts)
            header = ["distance_m", "m_channels", "total_rate_bps", "rate_gain"]
            lines = [",".join(header)]
            lines += [
                ",".join(_fmt(row[col]) for col in header) for row in rows
            ]
        else:
            metrics = sweep(sweep_configs(cfg))
            lines = metrics_csv_rows(metrics)
    except Exception as exc:  # per-run failures carry the config index
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    _write_lines(args.out, lines)
    if args.out and args.out != "-":
        script_path = args.out + ".plot.py"
        with open(script_path, "w", encoding="utf-8") as fh:
            fh.write(_plot_script(cfg.sweep.kind, args.out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcdmac",
        description="Multi-channel diversity MAC: allocation, simulation, analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one allocation instance file")
    p_solve.add_argument("instance", help="path to the instance file")
    p_solve.add_argument("--oracle", action="store_true",
                         help="cross-check against the exhaustive solver")
    p_solve.add_argument("--out", default=None, help="output path (default stdout)")
    p_solve.set_defaults(func=cmd_solve)

    for name, func, extra in (
        ("simulate", cmd_simulate, True),
        ("analyze", cmd_analyze, False),
        ("sweep", cmd_sweep, False),
    ):
        p = sub.add_parser(name, help=f"{name} a scenario config")
        p.add_argument("--config", required=True, help="scenario config path")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        if extra:
            p.add_argument("--trace", action="store_true",
                           help="also write a packet trace next to the output")
        p.set_defaults(func=func)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # unexpected runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
