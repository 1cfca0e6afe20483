"""Multi-agent protocols and baselines.

All protocols share one synchronous epoch engine: in each (sub-)epoch every
agent restarts UCB on its initial arms plus the recommendations it received
at the previous boundary, then the agents exchange their most-played arms
with their neighbours.  Plain LCC-UCB is the engine on a complete graph
with one sub-epoch per epoch; the graph variant uses ``D`` sub-epochs.

A block that the horizon cuts short sends nothing: there is no later block
to act on the recommendation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mabsim._kernels import full_comm_kernel
from mabsim.bandit import BanditInstance, ucb_run
from mabsim.errors import InvalidArgument
from mabsim.protocol import CommLedger, exchange, index_bits
from mabsim.rng import RngStream
from mabsim.schedule import (
    Block,
    EpochSchedule,
    PartitionSpec,
    k_prime,
    num_epochs,
    partition_matrix,
)
from mabsim.topology import Topology, complete_graph

ALGORITHMS = ("lcc-ucb", "lcc-ucb-graph", "lcc-ucb-neighbor", "full-comm", "no-comm")

# Report payload of the every-step baseline: arm index plus a 32-bit reward.
REWARD_BITS = 32


def agent_stream(rng: RngStream, n: int) -> RngStream:
    """Reward stream of agent ``n`` (0-based). Shared by every algorithm."""
    return rng.child(n + 1, "reward")


def step_regret(instance: BanditInstance, arm: int) -> float:
    instance.check_arm(arm)
    return float(instance.gaps[arm - 1])


def sample_points(horizon: int, stride: int) -> np.ndarray:
    """stride, 2 stride, ... up to the horizon, always ending at the horizon."""
    if stride < 1:
        raise InvalidArgument(f"stride must be positive, got {stride}")
    pts = np.arange(stride, horizon + 1, stride, dtype=np.int64)
    if pts.size == 0 or pts[-1] != horizon:
        pts = np.append(pts, horizon)
    return pts


@dataclass
class RegretTrace:
    agent_id: int  # 1-based
    t: np.ndarray
    cum_regret: np.ndarray


@dataclass
class EpochRecord:
    block: Block
    arm_sets: tuple[tuple[int, ...], ...]
    recommendations: tuple[int, ...]
    communicated: bool
    inboxes: tuple[frozenset[int], ...]  # what each agent holds after this block


@dataclass
class RunResult:
    algorithm: str
    instance: BanditInstance
    topology: Topology | None
    horizon: int
    pulled: np.ndarray = field(repr=False)  # (N, T) arm ids
    ledger: CommLedger
    schedule: EpochSchedule | None = None
    epochs: list[EpochRecord] = field(default_factory=list, repr=False)

    @property
    def agent_count(self) -> int:
        return self.pulled.shape[0]

    def cumulative_regret(self, n: int) -> np.ndarray:
        return np.cumsum(self.instance.gaps[self.pulled[n] - 1])

    def traces(self, stride: int = 1) -> list[RegretTrace]:
        pts = sample_points(self.horizon, stride)
        return [
            RegretTrace(n + 1, pts, self.cumulative_regret(n)[pts - 1])
            for n in range(self.agent_count)
        ]

    def sampled_matrix(self, stride: int) -> np.ndarray:
        """(N, S) cumulative regret at ``sample_points(T, stride)``."""
        return np.stack([tr.cum_regret for tr in self.traces(stride)])

    def final_regret(self) -> np.ndarray:
        return np.array([self.cumulative_regret(n)[-1] for n in range(self.agent_count)])

    def schedule_summary(self) -> dict:
        if self.schedule is None:
            return {}
        s = self.schedule
        blocks = [e.block for e in self.epochs]
        out = {
            "k_prime": s.k_prime,
            "base_duration": s.base_duration,
            "sub_epochs": s.sub_epochs,
            "epochs_formula": num_epochs(s.horizon, s.k_prime, s.sub_epochs),
            "epochs_executed": s.completed_epochs(),
            "epochs_played": s.played_epochs(),
            "blocks": [
                {
                    "epoch": b.epoch,
                    "sub_epoch": b.sub_epoch,
                    "start": b.start,
                    "duration": b.duration,
                    "nominal": b.nominal,
                    "delta_tilde": s.delta_tilde(b.epoch) if s.horizon >= 2 else None,
                    "communicated": not b.truncated,
                }
                for b in blocks
            ],
        }
        return out


def _run_blocks(
    algorithm: str,
    instance: BanditInstance,
    topology: Topology,
    kp: int,
    sub_epochs: int,
    horizon: int,
    rng: RngStream,
    ledger: CommLedger | None,
) -> RunResult:
    n_agents = topology.node_count
    if horizon < 1:
        raise InvalidArgument(f"horizon must be positive, got {horizon}")
    spec = PartitionSpec(n_agents, instance.arm_count)
    initial = [frozenset(row) for row in partition_matrix(spec).tolist()]
    streams = [agent_stream(rng, n) for n in range(n_agents)]
    if ledger is None:
        ledger = CommLedger(n_agents, instance.arm_count)
    schedule = EpochSchedule(kp, horizon, sub_epochs)
    pulled = np.empty((n_agents, horizon), np.int32)
    inboxes: list[frozenset[int]] = [frozenset()] * n_agents
    records = []
    for block in schedule.blocks():
        stop = block.start + block.duration
        arm_sets, recs = [], []
        for n in range(n_agents):
            # only the latest inbox is kept: older recommendations are purged
            arms = tuple(sorted(initial[n] | inboxes[n]))
            run = ucb_run(arms, block.duration, instance, streams[n])
            pulled[n, block.start:stop] = run.pulled
            arm_sets.append(arms)
            recs.append(run.recommended)
        communicated = not block.truncated
        if communicated:
            inboxes = exchange(topology, recs, ledger)
        records.append(EpochRecord(block, tuple(arm_sets), tuple(recs), communicated, tuple(inboxes)))
    return RunResult(algorithm, instance, topology, horizon, pulled, ledger, schedule, records)


def run_lcc_ucb(
    instance: BanditInstance,
    n_agents: int,
    horizon: int,
    rng: RngStream,
    ledger: CommLedger | None = None,
) -> RunResult:
    """Every agent hears every other agent after each epoch."""
    topo = complete_graph(n_agents)
    kp = k_prime(PartitionSpec(n_agents, instance.arm_count))
    return _run_blocks("lcc-ucb", instance, topo, kp, 1, horizon, rng, ledger)


def run_lcc_ucb_neighbor(
    instance: BanditInstance,
    topology: Topology,
    horizon: int,
    rng: RngStream,
    ledger: CommLedger | None = None,
) -> RunResult:
    """LCC-UCB with recommendations delivered to graph neighbours only."""
    kp = _graph_k_prime(instance, topology)
    return _run_blocks("lcc-ucb-neighbor", instance, topology, kp, 1, horizon, rng, ledger)


def run_lcc_ucb_graph(
    instance: BanditInstance,
    topology: Topology,
    horizon: int,
    rng: RngStream,
    ledger: CommLedger | None = None,
    k_prime_override: int | None = None,
) -> RunResult:
    """Epochs split into ``diameter`` sub-epochs, exchanging after each one."""
    kp = k_prime_override or _graph_k_prime(instance, topology)
    d = max(topology.diameter, 1)
    return _run_blocks("lcc-ucb-graph", instance, topology, kp, d, horizon, rng, ledger)


def _graph_k_prime(instance: BanditInstance, topology: Topology) -> int:
    spec = PartitionSpec(topology.node_count, instance.arm_count)
    if topology.node_count == 1:
        return k_prime(spec)
    return k_prime(spec, topology.max_degree)


def run_no_comm(instance: BanditInstance, n_agents: int, horizon: int, rng: RngStream) -> RunResult:
    """Each agent runs UCB over all arms on its own."""
    if n_agents < 1 or horizon < 1:
        raise InvalidArgument("need at least one agent and one step")
    arms = range(1, instance.arm_count + 1)
    pulled = np.empty((n_agents, horizon), np.int32)
    for n in range(n_agents):
        pulled[n] = ucb_run(arms, horizon, instance, agent_stream(rng, n)).pulled
    ledger = CommLedger(n_agents, instance.arm_count)
    return RunResult("no-comm", instance, None, horizon, pulled, ledger)


def run_full_comm(
    instance: BanditInstance,
    topology: Topology,
    horizon: int,
    rng: RngStream,
    ledger: CommLedger | None = None,
    chunk: int = 8192,
) -> RunResult:
    """Every step, each agent reports (arm, reward) to its neighbours.

    An agent picks the UCB-maximising arm over its pooled samples (its own
    plus everything its neighbours have reported), using ``ln(1 + pooled
    sample count)`` in the bonus.  On a complete graph this is one shared
    super-agent.  The ledger is a separate ``baseline`` ledger charging
    ``ceil(log2 K) + 32`` bits per report.
    """
    if horizon < 1:
        raise InvalidArgument(f"horizon must be positive, got {horizon}")
    n_agents, n_arms = topology.node_count, instance.arm_count
    if ledger is None:
        ledger = CommLedger(
            n_agents, n_arms, bits_per_message=index_bits(n_arms) + REWARD_BITS, kind="baseline"
        )
    indptr, indices = topology.csr()
    streams = [agent_stream(rng, n) for n in range(n_agents)]
    counts = np.zeros((n_agents, n_arms), np.int64)
    mu = np.zeros((n_agents, n_arms), np.float64)
    totals = np.zeros(n_agents, np.int64)
    pulled = np.empty((n_agents, horizon), np.int32)
    for start in range(0, horizon, chunk):
        size = min(chunk, horizon - start)
        noise = np.stack([instance.noise.draw(s, size) for s in streams])
        out = np.empty((n_agents, size), np.int32)
        full_comm_kernel(indptr, indices, instance.means, noise, instance.noise.gaussian,
                         counts, mu, totals, out)
        pulled[:, start:start + size] = out
    ledger.record_rounds(topology, horizon)
    return RunResult("full-comm", instance, topology, horizon, pulled, ledger)


def run_algorithm(
    algorithm: str,
    instance: BanditInstance,
    n_agents: int,
    horizon: int,
    rng: RngStream,
    topology: Topology | None = None,
) -> RunResult:
    if algorithm not in ALGORITHMS:
        raise InvalidArgument(f"unknown algorithm {algorithm!r}")
    if topology is not None and topology.node_count != n_agents:
        raise InvalidArgument("topology size does not match agent count")
    if algorithm == "lcc-ucb":
        return run_lcc_ucb(instance, n_agents, horizon, rng)
    if algorithm == "no-comm":
        return run_no_comm(instance, n_agents, horizon, rng)
    if topology is None:
        if algorithm != "full-comm":
            raise InvalidArgument(f"{algorithm} needs a topology")
        topology = complete_graph(n_agents)
    if algorithm == "full-comm":
        return run_full_comm(instance, topology, horizon, rng)
    if algorithm == "lcc-ucb-graph":
        return run_lcc_ucb_graph(instance, topology, horizon, rng)
    return run_lcc_ucb_neighbor(instance, topology, horizon, rng)
