"""Experiment orchestration, aggregation and persistence."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from functools import partial
from pathlib import Path

import numpy as np

from mabsim import __version__
from mabsim.agents import ALGORITHMS, run_algorithm, sample_points
from mabsim.bandit import BanditInstance, NoiseModel, sample_means
from mabsim.errors import InvalidArgument
from mabsim.protocol import ledger_report
from mabsim.rng import RngStream
from mabsim.topology import (
    Topology,
    complete_graph,
    gen_erdos_renyi_connected,
    load_topology,
    path_graph,
    star_graph,
)

log = logging.getLogger(__name__)

GRAPH_ALGORITHMS = ("lcc-ucb-graph", "lcc-ucb-neighbor")
BAND_METHOD = "empirical 2.5/97.5 percentiles across replications, linear interpolation"
REDUCTION = "each replication contributes the mean over agents of per-agent cumulative regret"


@dataclass
class ExperimentConfig:
    algorithm: str
    agents: int
    arms: int
    horizon: int = 100_000
    noise: str = "bernoulli"
    topology: str | None = None
    runs: int = 30
    seed: int = 0
    stride: int = 100
    out: str | None = None
    fixed_means: bool = False

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidArgument(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        for name in ("agents", "arms", "horizon", "runs", "stride"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgument(f"{name} must be >= 1")
        if self.seed < 0:
            raise InvalidArgument("seed must be non-negative")
        NoiseModel(self.noise)
        if self.topology is None and self.algorithm in GRAPH_ALGORITHMS:
            raise InvalidArgument(f"{self.algorithm} requires a topology")
        kind = parse_topology(self.topology or "complete", self.agents)[0]
        if self.algorithm == "lcc-ucb" and kind != "complete":
            raise InvalidArgument("lcc-ucb broadcasts to everyone; use lcc-ucb-neighbor on other graphs")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidArgument(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise InvalidArgument("config file must hold a flat JSON object")
        return cls.from_dict(data)

    def to_dict(self, *, echo: bool = False) -> dict:
        """Field dict; ``echo=True`` drops the output path so that identical
        experiments written to different places produce identical metadata."""
        data = asdict(self)
        if echo:
            data.pop("out")
        return data


def parse_topology(spec: str, n_agents: int) -> tuple[str, object]:
    """Split a topology spec into (kind, parameter).

    Accepted: ``complete``, ``path``, ``star``, ``erdos-renyi`` or ``er``
    (p = 10/N), ``erdos-renyi:P``, ``file:PATH``.
    """
    head, _, arg = spec.partition(":")
    if head in ("complete", "path", "star") and not arg:
        return head, None
    if head in ("erdos-renyi", "er"):
        p = float(arg) if arg else min(1.0, 10.0 / n_agents)
        if not 0.0 < p <= 1.0:
            raise InvalidArgument(f"edge probability must be in (0, 1], got {p}")
        return "erdos-renyi", p
    if head == "file" and arg:
        return "file", arg
    raise InvalidArgument(f"unrecognised topology spec {spec!r}")


def build_topology(spec: str | None, n_agents: int, rng: RngStream) -> Topology:
    kind, arg = parse_topology(spec or "complete", n_agents)
    if kind == "complete":
        return complete_graph(n_agents)
    if kind == "path":
        return path_graph(n_agents)
    if kind == "star":
        return star_graph(n_agents)
    if kind == "erdos-renyi":
        return gen_erdos_renyi_connected(n_agents, arg, rng)
    topo = load_topology(arg)
    if topo.node_count != n_agents:
        raise InvalidArgument(f"{arg} has {topo.node_count} nodes but {n_agents} agents were requested")
    return topo


@dataclass
class Replication:
    run_id: int
    curves: np.ndarray  # (N, S) sampled cumulative regret
    meta: dict


def run_replication(config: ExperimentConfig, run_id: int) -> Replication:
    base = RngStream(config.seed, run_id)
    means_run = 0 if config.fixed_means else run_id
    means = sample_means(config.arms, RngStream(config.seed, means_run, "means"))
    instance = BanditInstance(means, NoiseModel(config.noise))
    topo = None
    if config.algorithm != "no-comm":
        topo = build_topology(config.topology, config.agents, base.child("topology"))
    result = run_algorithm(config.algorithm, instance, config.agents, config.horizon, base, topo)
    sched = result.schedule_summary()
    meta = {
        "run_id": run_id,
        "means": means.tolist(),
        "schedule": sched,
        "ledger": ledger_report(
            result.ledger,
            topology=result.topology,
            epochs_formula=sched.get("epochs_formula"),
            epochs_executed=sched.get("epochs_executed"),
        ),
    }
    if topo is not None:
        meta["topology"] = {
            "name": topo.name,
            "diameter": topo.diameter,
            "max_degree": topo.max_degree,
            "edge_count": topo.edge_count,
            "attempts": topo.attempts,
        }
    return Replication(run_id, result.sampled_matrix(config.stride), meta)


def thread_count() -> int:
    raw = os.environ.get("MABSIM_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidArgument(f"MABSIM_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise InvalidArgument("MABSIM_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


@dataclass
class AggregateStats:
    t: np.ndarray
    median: np.ndarray
    lo95: np.ndarray
    hi95: np.ndarray

    @property
    def final_median(self) -> float:
        return float(self.median[-1])


def agent_mean(curves: np.ndarray) -> np.ndarray:
    """Mean over agents of an (N, S) matrix, summed in agent order."""
    curves = np.ascontiguousarray(curves, dtype=np.float64)
    return curves.sum(axis=0) / curves.shape[0]


def aggregate(t: np.ndarray, traces: np.ndarray) -> AggregateStats:
    """Pointwise median and 2.5/97.5 percentile band of (R, S) traces."""
    traces = np.asarray(traces, dtype=np.float64)
    if traces.ndim != 2 or traces.shape[1] != len(t):
        raise InvalidArgument(
            f"traces of shape {traces.shape} do not match a grid of {len(t)} samples"
        )
    median = np.median(traces, axis=0)
    lo, hi = np.percentile(traces, [2.5, 97.5], axis=0)
    return AggregateStats(np.asarray(t, np.int64), median, lo, hi)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    t: np.ndarray
    per_agent: np.ndarray  # (R, N, S)
    stats: AggregateStats
    meta: dict

    @property
    def curves(self) -> np.ndarray:
        return np.stack([agent_mean(c) for c in self.per_agent])


def run_experiment(
    config: ExperimentConfig, out: str | Path | None = None, threads: int | None = None
) -> ExperimentResult:
    """Run every replication, aggregate, and write outputs if ``out`` is set."""
    threads = thread_count() if threads is None else threads
    job = partial(run_replication, config)
    run_ids = range(config.runs)
    if threads > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=min(threads, config.runs)) as pool:
            reps = list(pool.map(job, run_ids))
    else:
        reps = [job(r) for r in run_ids]
    t = sample_points(config.horizon, config.stride)
    per_agent = np.stack([r.curves for r in reps])
    stats = aggregate(t, np.stack([agent_mean(c) for c in per_agent]))
    meta = {
        "software": "mabsim",
        "software_version": __version__,
        "master_seed": config.seed,
        "config": config.to_dict(echo=True),
        "band_method": BAND_METHOD,
        "reduction": REDUCTION,
        "runs": [r.meta for r in reps],
    }
    result = ExperimentResult(config, t, per_agent, stats, meta)
    out = out if out is not None else config.out
    if out is not None:
        write_csv(result, out)
    return result


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(result: ExperimentResult, path: str | Path) -> None:
    """Write aggregate.csv, runs.csv and meta.json into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    s = result.stats
    with open(path / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "median", "lo95", "hi95"])
        for row in zip(s.t.tolist(), s.median, s.lo95, s.hi95):
            w.writerow([row[0], _fmt(row[1]), _fmt(row[2]), _fmt(row[3])])
    t = result.t.tolist()
    with open(path / "runs.csv", "w", newline="") as fh:
        fh.write("run_id,agent_id,t,cum_regret\n")
        for r, rep in enumerate(result.per_agent):
            for n, curve in enumerate(rep):
                fh.writelines(f"{r},{n + 1},{ti},{_fmt(v)}\n" for ti, v in zip(t, curve.tolist()))
    (path / "meta.json").write_text(json.dumps(result.meta, indent=1) + "\n")


def read_aggregate(path: str | Path) -> AggregateStats:
    data = np.loadtxt(Path(path) / "aggregate.csv", delimiter=",", skiprows=1, ndmin=2)
    return AggregateStats(data[:, 0].astype(np.int64), data[:, 1], data[:, 2], data[:, 3])


def read_runs(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Parse runs.csv back into (t, per_agent[R, N, S])."""
    data = np.loadtxt(Path(path) / "runs.csv", delimiter=",", skiprows=1, ndmin=2)
    runs = int(data[:, 0].max()) + 1
    agents = int(data[:, 1].max())
    t = np.unique(data[:, 2]).astype(np.int64)
    return t, data[:, 3].reshape(runs, agents, t.size)


def read_config(path: str | Path) -> ExperimentConfig:
    meta = json.loads((Path(path) / "meta.json").read_text())
    return ExperimentConfig.from_dict(meta["config"])
