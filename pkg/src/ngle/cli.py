"""``ngle`` command line: net-stats, run, sweep, threshold.

Configuration comes from an optional YAML file of dotted keys (nested
blocks are flattened, so ``network: {type: rg}`` equals ``network.type: rg``),
overridden by flags. Every output is a pure function of the configuration
and the seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ._rng import RandomStream
from .experiment import (DEFAULT_SEED, INCREMENT_BIN_LABELS, STANDARD_ERROR_RATES, ExperimentPlan,
                         find_threshold, increment_table, interval_histogram, memory_linearity,
                         simulate, sweep)
from .game import ErrorMode, run
from .topology import UnconnectableError, generate, make_spec, network_stats, read_edge_list, write_edge_list

DEFAULTS = {
    "network.type": "rg",
    "network.n": 2000,
    "network.p": 0.05,
    "network.k": 20,
    "network.rp": 0.1,
    "network.m0": None,
    "network.m": 25,
    "network.edge_list": None,
    "game.error_rate": 0.0,
    "game.error_mode": "learning",
    "game.vocab_size": 10_000,
    "game.max_iterations": 10_000_000,
    "game.force": False,
    "experiment.trials": 20,
    "experiment.error_rates": list(STANDARD_ERROR_RATES),
    "experiment.threshold_step": 0.0001,
    "experiment.threshold_limit": 0.5,
    "experiment.fix_graph": False,
    "seed": DEFAULT_SEED,
    "output.dir": None,
    "output.export_graph": None,
}

# flag dest -> config key
FLAG_KEYS = {
    "net": "network.type", "n": "network.n", "p": "network.p", "k": "network.k", "rp": "network.rp",
    "m0": "network.m0", "m": "network.m", "graph": "network.edge_list",
    "rho": "game.error_rate", "mode": "game.error_mode", "vocab": "game.vocab_size",
    "max_iter": "game.max_iterations", "force": "game.force",
    "trials": "experiment.trials", "rates": "experiment.error_rates", "step": "experiment.threshold_step",
    "limit": "experiment.threshold_limit", "fix_graph": "experiment.fix_graph",
    "seed": "seed", "out": "output.dir", "export_graph": "output.export_graph",
}


class ConfigError(ValueError):
    pass


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def load_config_file(path) -> dict:
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of dotted keys")
    flat = _flatten(data)
    unknown = sorted(set(flat) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    return flat


@dataclass
class CliConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def resolve(cls, path=None, overrides: Optional[dict] = None) -> "CliConfig":
        values = dict(DEFAULTS)
        if path is not None:
            values.update(load_config_file(path))
        for key, value in (overrides or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key}")
            if value is not None:
                values[key] = value
        rates = values["experiment.error_rates"]
        if isinstance(rates, str):
            values["experiment.error_rates"] = [float(x) for x in rates.split(",") if x.strip()]
        return cls(values)

    def __getitem__(self, key):
        return self.values[key]

    def network(self):
        v = self.values
        return make_spec(v["network.type"], v["network.n"], p=v["network.p"], k=v["network.k"],
                         rp=v["network.rp"], m0=v["network.m0"], m=v["network.m"])

    def plan(self, **changes) -> ExperimentPlan:
        v = self.values
        kw = dict(
            network=self.network(),
            error_rates=tuple(v["experiment.error_rates"]),
            trials=int(v["experiment.trials"]),
            error_mode=v["game.error_mode"],
            base_seed=int(v["seed"]),
            max_iterations=int(v["game.max_iterations"]),
            vocab_size=int(v["game.vocab_size"]),
            threshold_step=float(v["experiment.threshold_step"]),
            threshold_limit=float(v["experiment.threshold_limit"]),
            fix_graph=bool(v["experiment.fix_graph"]),
            force=bool(v["game.force"]),
        )
        kw.update(changes)
        return ExperimentPlan(**kw)

    @property
    def out_dir(self) -> Optional[Path]:
        d = self.values["output.dir"]
        return None if d is None else Path(d)


# ---------------------------------------------------------------------------
# formatting


def _fmt(x) -> str:
    if x is None:
        return "censored"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6f}"


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump_json(obj) + "\n")


def _network_label(cfg: CliConfig) -> str:
    if cfg["network.edge_list"]:
        return f"edge-list:{cfg['network.edge_list']}"
    return cfg.network().label


# ---------------------------------------------------------------------------
# subcommands


def cmd_net_stats(cfg: CliConfig) -> dict:
    """Structural statistics of generated (or imported) network instances."""
    keys = ("average_degree", "average_path_length", "clustering_coefficient")
    if cfg["network.edge_list"]:
        graphs = [read_edge_list(cfg["network.edge_list"])]
    else:
        plan = cfg.plan()
        graphs = [generate(plan.network, np.random.default_rng(plan.graph_seed(t)))
                  for t in range(plan.trials)]
    instances = [network_stats(g) | {"nodes": g.n, "edges": g.n_edges} for g in graphs]
    report = {
        "network": _network_label(cfg),
        "instances": instances,
        "mean": {k: float(np.mean([s[k] for s in instances])) for k in keys},
    }
    if cfg.out_dir is not None:
        _write_json(cfg.out_dir / "net_stats.json", report)
    return report


def cmd_run(cfg: CliConfig) -> dict:
    """One seeded game; trajectory CSV plus JSON summary."""
    plan = cfg.plan()
    rho = float(cfg["game.error_rate"])
    game_cfg = plan.config(rho)
    if cfg["network.edge_list"]:
        g = read_edge_list(cfg["network.edge_list"])
    else:
        g = generate(plan.network, np.random.default_rng(plan.graph_seed(0)))
    if cfg["output.export_graph"]:
        write_edge_list(g, cfg["output.export_graph"])
    result = run(g, game_cfg, RandomStream(plan.game_seed(rho, 0)))
    summary = {
        "network": _network_label(cfg),
        "error_rate": rho,
        "error_mode": game_cfg.error_mode.value,
        "seed": plan.base_seed,
    } | result.summary()
    if cfg.out_dir is not None:
        _write_csv(cfg.out_dir / "trajectory.csv", result.series.HEADER, result.series.rows())
        _write_json(cfg.out_dir / "summary.json", summary)
    return summary


SWEEP_HEADER = ("error_rate", "mean_convergence_iterations", "relative_increment",
                "mean_max_distinct_words", "converged_trials")


def cmd_sweep(cfg: CliConfig, engine=simulate) -> dict:
    """Error-rate sweep: convergence-time increments, histogram, linearity."""
    plan = cfg.plan()
    if not any(r == 0 for r in plan.error_rates):
        raise ConfigError("a sweep needs the error_rate = 0 baseline")
    result = sweep(plan, engine)
    try:
        table = increment_table(result)
        incs = table.increments
        note = None
    except ValueError as exc:
        table, incs, note = None, [None] * len(result.points), str(exc)

    rows = [(p.error_rate, p.mean_convergence_iterations, inc, p.mean_max_distinct_words,
             p.converged_trials) for p, inc in zip(result.points, incs)]
    summary = {
        "network": _network_label(cfg),
        "error_mode": plan.error_mode.value,
        "trials": plan.trials,
        "seed": plan.base_seed,
        "baseline_convergence_iterations": None if table is None else table.baseline,
        "summary": None if table is None else table.summary,
        "positive_increments": None if table is None else table.positives,
        "negative_increments": None if table is None else table.negatives,
        "histogram": None if table is None else {
            "intervals": list(INCREMENT_BIN_LABELS),
            "counts": list(interval_histogram(table.non_baseline())),
        },
        "censored_error_rates": [p.error_rate for p in result.points if p.converged_trials == 0],
        "capped_trials": {_fmt(p.error_rate): p.capped_trials for p in result.points if p.capped_trials},
        "linear_fit": None,
    }
    if note:
        summary["note"] = note
    high = [p for p in result.points if p.error_rate >= 0.1 - 1e-12]
    if len(high) >= 3 and len({p.error_rate for p in high}) > 1:
        fit = memory_linearity(result)
        summary["linear_fit"] = {"min_error_rate": 0.1, "slope": fit.slope,
                                 "intercept": fit.intercept, "r_squared": fit.r_squared}

    out = cfg.out_dir
    if out is not None:
        _write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
        _write_csv(out / "increments.csv", ("error_rate", "relative_increment"),
                   [(r[0], r[2]) for r in rows])
        curves = []
        for p in result.points:
            if p.series is not None:
                curves.extend((p.error_rate, *row) for row in p.series.rows())
        _write_csv(out / "curves.csv", ("error_rate", "iteration", "total_words", "distinct_words",
                                        "success_rate"), curves)
        _write_json(out / "sweep_summary.json", summary)
    return summary | {"rows": [dict(zip(SWEEP_HEADER, r)) for r in rows]}


def cmd_threshold(cfg: CliConfig, engine=simulate) -> dict:
    """Per-trial error-rate threshold scan (persistent errors) with box statistics."""
    plan = cfg.plan(error_mode=ErrorMode.PERSISTENT)
    result = find_threshold(plan, engine)
    box = result.summary
    summary = {
        "network": _network_label(cfg),
        "error_mode": plan.error_mode.value,
        "trials": plan.trials,
        "seed": plan.base_seed,
        "step": plan.threshold_step,
        "thresholds": result.thresholds,
        "censored_trials": result.censored,
        "attempts": result.attempts,
        "box": None if box is None else box.as_dict(),
    }
    if cfg.out_dir is not None:
        _write_csv(cfg.out_dir / "thresholds.csv", ("trial", "threshold"), enumerate(result.thresholds))
        _write_json(cfg.out_dir / "threshold_summary.json", summary)
    return summary


COMMANDS = {"net-stats": cmd_net_stats, "run": cmd_run, "sweep": cmd_sweep, "threshold": cmd_threshold}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML file of dotted keys")
    common.add_argument("--seed", type=int)
    common.add_argument("--net", choices=["rg", "er", "sw", "ws", "sf", "ba"])
    common.add_argument("--n", type=int)
    common.add_argument("--p", type=float)
    common.add_argument("--k", type=int, help="small world: neighbours per side")
    common.add_argument("--rp", type=float, help="small world: rewiring probability")
    common.add_argument("--m0", type=int, help="scale free: initial (complete) nodes, default m+1")
    common.add_argument("--m", type=int, help="scale free: edges per new node")
    common.add_argument("--graph", help="edge-list file to use instead of generating a network")
    common.add_argument("--rho", type=float, help="error rate")
    common.add_argument("--mode", choices=["learning", "persistent"])
    common.add_argument("--vocab", type=int, help="vocabulary size")
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--rates", help="comma-separated error rates for sweep")
    common.add_argument("--step", type=float, help="threshold scan step")
    common.add_argument("--limit", type=float, help="threshold scan upper bound")
    common.add_argument("--fix-graph", dest="fix_graph", action="store_true", default=None,
                        help="threshold scan: reuse one graph per trial")
    common.add_argument("--out", help="output directory")
    common.add_argument("--export-graph", dest="export_graph", help="run: write the graph as an edge list")
    common.add_argument("--force", action="store_true", default=None,
                        help="accept error rates above 0.5")

    parser = argparse.ArgumentParser(prog="ngle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__.splitlines()[0])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {FLAG_KEYS[k]: v for k, v in vars(args).items() if k in FLAG_KEYS}
    try:
        cfg = CliConfig.resolve(args.config, overrides)
        report = COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, TypeError, UnconnectableError, yaml.YAMLError) as exc:
        print(f"ngle {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ngle {args.command}: {exc}", file=sys.stderr)
        return 1
    print(_dump_json(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
