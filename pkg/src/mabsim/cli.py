"""Command-line entry point: ``mabsim {run,plot,compare,paper-grid}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from mabsim.agents import ALGORITHMS
from mabsim.errors import GenerationFailure, InvalidArgument, TopologyFileError
from mabsim.harness import (
    GRAPH_ALGORITHMS,
    ExperimentConfig,
    read_aggregate,
    read_config,
    run_experiment,
)
from mabsim.plot import emit_svg_plot

log = logging.getLogger("mabsim")

COMPLETE_SET = ("full-comm", "lcc-ucb", "no-comm")
GRAPH_SET = ("lcc-ucb-graph", "lcc-ucb-neighbor", "full-comm", "no-comm")

# (N, K) settings run by paper-grid
GRID_COMPLETE = ((10, 100), (20, 100), (10, 200))
GRID_SPARSE = ((100, 250), (150, 250), (100, 500))

FLAG_TO_FIELD = {
    "algo": "algorithm",
    "agents": "agents",
    "arms": "arms",
    "horizon": "horizon",
    "runs": "runs",
    "seed": "seed",
    "noise": "noise",
    "topology": "topology",
    "stride": "stride",
    "out": "out",
    "fixed_means": "fixed_means",
}


class UsageError(Exception):
    pass


def _experiment_flags(p: argparse.ArgumentParser, *, single: bool) -> None:
    if single:
        p.add_argument("--algo", choices=ALGORITHMS)
    p.add_argument("--agents", type=int)
    p.add_argument("--arms", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", choices=("bernoulli", "gaussian"))
    p.add_argument("--topology", help="complete | path | star | erdos-renyi[:P] | file:PATH")
    p.add_argument("--stride", type=int)
    p.add_argument("--out")
    p.add_argument("--fixed-means", action="store_true", default=None)
    p.add_argument("--config", help="flat JSON config; its keys override flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mabsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one algorithm for several replications")
    _experiment_flags(run, single=True)

    plot = sub.add_parser("plot", help="plot aggregate.csv from result directories")
    plot.add_argument("--inputs", nargs="*", default=[])
    plot.add_argument("--out", required=True)
    plot.add_argument("--log-x", action="store_true")
    plot.add_argument("--title")

    cmp_ = sub.add_parser("compare", help="run several algorithms under matched seeds")
    _experiment_flags(cmp_, single=False)
    cmp_.add_argument("--algos", nargs="+", choices=ALGORITHMS)
    cmp_.add_argument("--log-x", action="store_true")

    grid = sub.add_parser("paper-grid", help="run the full reference grid of settings")
    grid.add_argument("--runs", type=int, default=30)
    grid.add_argument("--horizon", type=int, default=100_000)
    grid.add_argument("--seed", type=int, default=0)
    grid.add_argument("--stride", type=int, default=100)
    grid.add_argument("--noise", choices=("bernoulli", "gaussian"), default="bernoulli")
    grid.add_argument("--out", default="paper-grid")
    return parser


def _config_from_args(args: argparse.Namespace, algorithm: str | None = None) -> ExperimentConfig:
    values = {}
    for flag, name in FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a flat JSON object")
        values.update(data)
    if algorithm is not None:
        values["algorithm"] = algorithm
    for need in ("algorithm", "agents", "arms"):
        if need not in values:
            flag = "--algo" if need == "algorithm" else f"--{need}"
            raise UsageError(f"missing {flag}")
    if values["algorithm"] in GRAPH_ALGORITHMS and not values.get("topology"):
        raise UsageError(f"--algo {values['algorithm']} needs --topology")
    try:
        return ExperimentConfig.from_dict(values)
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = config.out or f"results/{config.algorithm}"
    result = run_experiment(config, out=out)
    print(f"{config.algorithm}: median final regret {result.stats.final_median:.3f} -> {out}")
    return 0


def compare(base: dict, algorithms, out: Path, *, log_x: bool = False, title: str | None = None) -> list[dict]:
    """Run ``algorithms`` with otherwise identical configs; write plot and ordering."""
    out.mkdir(parents=True, exist_ok=True)
    series, rows = [], []
    for algo in algorithms:
        cfg = dict(base, algorithm=algo, out=str(out / algo))
        result = run_experiment(ExperimentConfig.from_dict(cfg))
        series.append((algo, result.stats))
        rows.append({"algorithm": algo, "median_final_regret": result.stats.final_median})
        log.info("%s: %.3f", algo, result.stats.final_median)
    emit_svg_plot(series, out / "compare.svg", log_x=log_x, title=title)
    rows.sort(key=lambda r: r["median_final_regret"])
    (out / "ordering.json").write_text(json.dumps(rows, indent=1) + "\n")
    with open(out / "ordering.txt", "w") as fh:
        for rank, r in enumerate(rows, start=1):
            fh.write(f"{rank}. {r['algorithm']}: {r['median_final_regret']:.17g}\n")
    return rows


def cmd_compare(args: argparse.Namespace) -> int:
    args.algo = None
    # no-comm accepts any topology, so this validates only the shared fields
    config = _config_from_args(args, algorithm="no-comm")
    base = config.to_dict()
    base.pop("algorithm")
    topo = base["topology"]
    complete = topo in (None, "complete")
    algos = args.algos or (COMPLETE_SET if complete else GRAPH_SET)
    if "lcc-ucb" in algos and not complete:
        raise UsageError("lcc-ucb only runs on the complete graph; use lcc-ucb-neighbor")
    if topo is None and any(a in GRAPH_ALGORITHMS for a in algos):
        raise UsageError("graph algorithms need --topology")
    out = Path(config.out or "results/compare")
    rows = compare(base, algos, out, log_x=args.log_x)
    for r in rows:
        print(f"{r['algorithm']}: {r['median_final_regret']:.3f}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    if not args.inputs:
        raise UsageError("plot needs at least one --inputs directory")
    series = []
    for d in args.inputs:
        try:
            label = read_config(d).algorithm
            stats = read_aggregate(d)
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot read results from {d}: {exc}") from exc
        series.append((label, stats))
    emit_svg_plot(series, args.out, log_x=args.log_x, title=args.title)
    return 0


def cmd_paper_grid(args: argparse.Namespace) -> int:
    out = Path(args.out)
    common = {"horizon": args.horizon, "runs": args.runs, "seed": args.seed,
              "stride": args.stride, "noise": args.noise}
    for n, k in GRID_COMPLETE:
        base = dict(common, agents=n, arms=k, topology="complete")
        compare(base, COMPLETE_SET, out / f"complete_N{n}_K{k}", title=f"complete graph, (N, K) = ({n}, {k})")
    for n, k in GRID_SPARSE:
        base = dict(common, agents=n, arms=k, topology=f"erdos-renyi:{10 / n!r}")
        compare(base, GRAPH_SET, out / f"erdos_renyi_N{n}_K{k}",
                title=f"Erdos-Renyi p = 10/N, (N, K) = ({n}, {k})")
    return 0


COMMANDS = {"run": cmd_run, "plot": cmd_plot, "compare": cmd_compare, "paper-grid": cmd_paper_grid}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mabsim: error: {exc}", file=sys.stderr)
        return 2
    except (InvalidArgument, GenerationFailure, TopologyFileError, OSError) as exc:
        print(f"mabsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
