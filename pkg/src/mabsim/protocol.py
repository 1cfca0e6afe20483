"""Synchronous arm-index exchange and exact communication accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mabsim.errors import InvalidArgument
from mabsim.topology import Topology


def index_bits(arm_count: int) -> int:
    """ceil(log2 K): bits needed to name one of K arms."""
    if arm_count < 1:
        raise InvalidArgument(f"arm count must be positive, got {arm_count}")
    return (arm_count - 1).bit_length()


@dataclass(frozen=True)
class Recommendation:
    sender: int  # 0-based agent position
    arm: int


@dataclass
class CommLedger:
    """Per-agent message and bit counters.

    ``kind`` separates protocol traffic from the baseline's every-step
    sharing, which is charged ``bits_per_message`` per report.
    """

    agent_count: int
    arm_count: int
    bits_per_message: int | None = None
    kind: str = "protocol"
    rounds: int = 0
    rounds_participated: np.ndarray = field(init=False, repr=False)
    messages_sent: np.ndarray = field(init=False, repr=False)
    messages_received: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.bits_per_message is None:
            self.bits_per_message = index_bits(self.arm_count)
        zeros = lambda: np.zeros(self.agent_count, np.int64)  # noqa: E731
        self.rounds_participated = zeros()
        self.messages_sent = zeros()
        self.messages_received = zeros()

    @property
    def bits_sent(self) -> np.ndarray:
        return self.messages_sent * self.bits_per_message

    @property
    def bits_received(self) -> np.ndarray:
        return self.messages_received * self.bits_per_message

    def record_rounds(self, topology: Topology, count: int = 1) -> None:
        """Charge ``count`` rounds in which every agent messages every neighbour."""
        if topology.node_count != self.agent_count:
            raise InvalidArgument("ledger and topology disagree on agent count")
        if topology.node_count == 1 or count == 0:
            return
        deg = np.asarray(topology.degrees, np.int64)
        self.rounds += count
        self.rounds_participated += count
        self.messages_sent += count * deg
        # undirected: every neighbour sends back exactly one message
        self.messages_received += count * deg


def exchange(topology: Topology, outgoing: Sequence[int], ledger: CommLedger) -> list[frozenset[int]]:
    """Every agent sends its arm to each neighbour; returns per-agent inboxes.

    All outgoing values are collected before any inbox is built, so the
    result does not depend on delivery order.
    """
    if len(outgoing) != topology.node_count:
        raise InvalidArgument(
            f"expected {topology.node_count} outgoing arms, got {len(outgoing)}"
        )
    for n, arm in enumerate(outgoing):
        if not 1 <= arm <= ledger.arm_count:
            raise InvalidArgument(f"agent {n + 1} sent arm {arm} outside 1..{ledger.arm_count}")
    outgoing = tuple(int(a) for a in outgoing)
    inboxes = [frozenset(outgoing[m] for m in nbrs) for nbrs in topology.adjacency]
    ledger.record_rounds(topology)
    return inboxes


def ledger_report(
    ledger: CommLedger,
    *,
    topology: Topology | None = None,
    epochs_formula: int | None = None,
    epochs_executed: int | None = None,
) -> dict:
    """Serializable summary plus the closed-form bounds to compare against.

    Agent ids in the report are 1-based.
    """
    report = {
        "kind": ledger.kind,
        "bits_per_message": ledger.bits_per_message,
        "rounds": ledger.rounds,
        "agents": [
            {
                "agent_id": n + 1,
                "rounds_participated": int(ledger.rounds_participated[n]),
                "messages_sent": int(ledger.messages_sent[n]),
                "messages_received": int(ledger.messages_received[n]),
                "bits_sent": int(ledger.bits_sent[n]),
                "bits_received": int(ledger.bits_received[n]),
            }
            for n in range(ledger.agent_count)
        ],
        "totals": {
            "messages_sent": int(ledger.messages_sent.sum()),
            "messages_received": int(ledger.messages_received.sum()),
            "bits_sent": int(ledger.bits_sent.sum()),
            "bits_received": int(ledger.bits_received.sum()),
        },
    }
    if topology is not None and ledger.kind == "protocol":
        n_agents = ledger.agent_count
        bits = index_bits(ledger.arm_count)
        theory = {
            "complete_send_bits_per_round": (n_agents - 1) * bits,
            "epochs_formula": epochs_formula,
            "epochs_executed": epochs_executed,
        }
        if epochs_formula is not None:
            d, kg = topology.diameter, topology.max_degree
            theory["graph_total_bits_bound"] = 2 * kg * bits * d * epochs_formula
            theory["diameter"] = d
            theory["max_degree"] = kg
        report["theory"] = theory
    return report
