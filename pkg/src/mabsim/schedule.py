"""Closed-form arithmetic of the epoch protocols.

Epoch ``j`` nominally lasts ``K'(K'+1) 2**j`` steps.  In the graph protocol an
epoch is split into ``D`` sub-epochs that each last that long.  The last block
is clipped so that block durations sum to the horizon exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from mabsim.errors import InvalidArgument

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionSpec:
    agent_count: int
    arm_count: int

    def __post_init__(self) -> None:
        if self.agent_count < 1 or self.arm_count < 1:
            raise InvalidArgument(
                f"need N >= 1 and K >= 1, got N={self.agent_count}, K={self.arm_count}"
            )
        if self.agent_count > self.arm_count:
            log.warning("more agents (%d) than arms (%d)", self.agent_count, self.arm_count)

    @property
    def share(self) -> int:
        """ceil(K / N), the size of every initial arm set."""
        return -(-self.arm_count // self.agent_count)


def initial_arm_set(n: int, spec: PartitionSpec) -> tuple[int, ...]:
    """Arms initially assigned to agent ``n`` (1-based), in wraparound order.

    Agent ``n`` gets the ``ceil(K/N)`` consecutive indices starting at
    ``((n-1) ceil(K/N) mod K) + 1``, wrapping past ``K`` back to 1.
    """
    if not 1 <= n <= spec.agent_count:
        raise InvalidArgument(f"agent {n} outside 1..{spec.agent_count}")
    c, k = spec.share, spec.arm_count
    arms = (((n - 1) * c + i) % k + 1 for i in range(c))
    return tuple(dict.fromkeys(arms))


def partition_matrix(spec: PartitionSpec) -> np.ndarray:
    """All initial arm sets at once: row ``n - 1`` holds agent ``n``'s arms.

    Rows never contain duplicates because ``ceil(K/N) <= K``.
    """
    c, k = spec.share, spec.arm_count
    offsets = np.arange(spec.agent_count, dtype=np.int64)[:, None] * c
    return (offsets + np.arange(c, dtype=np.int64)) % k + 1


def k_prime(spec: PartitionSpec, max_degree: int | None = None) -> int:
    """Bound on the augmented arm set size.

    ``ceil(K/N) + N - 1`` when every agent hears from every other agent;
    ``ceil(K/N) + K_G`` on a graph with maximum degree ``max_degree``.
    """
    if max_degree is None:
        return spec.share + spec.agent_count - 1
    if max_degree < 1:
        raise InvalidArgument(f"graph regime needs K_G >= 1, got {max_degree}")
    return spec.share + max_degree


class Block(NamedTuple):
    """One (sub-)epoch of play."""

    epoch: int
    sub_epoch: int  # 1..D; always 1 without sub-epochs
    start: int
    duration: int
    nominal: int

    @property
    def truncated(self) -> bool:
        return self.duration < self.nominal


@dataclass(frozen=True)
class EpochSchedule:
    k_prime: int
    horizon: int
    sub_epochs: int = 1

    def __post_init__(self) -> None:
        if self.k_prime < 1:
            raise InvalidArgument(f"K' must be positive, got {self.k_prime}")
        if self.horizon < 0:
            raise InvalidArgument(f"horizon must be non-negative, got {self.horizon}")
        if self.sub_epochs < 1:
            raise InvalidArgument(f"sub-epoch count must be positive, got {self.sub_epochs}")

    @property
    def base_duration(self) -> int:
        return self.k_prime * (self.k_prime + 1)

    def nominal(self, j: int) -> int:
        return self.base_duration << j

    def blocks(self) -> Iterator[Block]:
        t, j = 0, 0
        while t < self.horizon:
            nominal = self.nominal(j)
            for d in range(1, self.sub_epochs + 1):
                if t >= self.horizon:
                    return
                dur = min(self.horizon - t, nominal)
                yield Block(j, d, t, dur, nominal)
                t += dur
            j += 1

    def completed_epochs(self) -> int:
        """Epochs whose every sub-epoch ran for its full nominal length."""
        full = [b for b in self.blocks() if not b.truncated]
        return sum(1 for b in full if b.sub_epoch == self.sub_epochs)

    def played_epochs(self) -> int:
        return len({b.epoch for b in self.blocks()})

    def delta_tilde(self, j: int) -> float:
        return delta_tilde(self.k_prime, self.horizon, self.nominal(j))


def epoch_duration(j: int, schedule: EpochSchedule) -> int:
    """Steps spent in each (sub-)epoch of epoch ``j``: min(remaining, K'(K'+1)2^j).

    Returns 0 when the horizon runs out before epoch ``j`` starts.  With
    sub-epochs, the value is for the first sub-epoch of the epoch.
    """
    if j < 0:
        raise InvalidArgument(f"epoch index must be non-negative, got {j}")
    start = schedule.sub_epochs * schedule.base_duration * ((1 << j) - 1)
    return max(0, min(schedule.horizon - start, schedule.nominal(j)))


def num_epochs(horizon: int, k_prime: int, sub_epochs: int = 1) -> int:
    """floor(log2(T / (D K'(K'+1)) + 1)), evaluated in exact integer arithmetic.

    This is the number of epochs that complete without truncation.
    """
    if horizon < 1:
        raise InvalidArgument(f"horizon must be positive, got {horizon}")
    unit = sub_epochs * k_prime * (k_prime + 1)
    return ((horizon + unit) // unit).bit_length() - 1


def delta_tilde(k_prime: int, horizon: float, duration: float) -> float:
    """Gap scale sqrt(16 K' ln T / T_j) reported per epoch as a diagnostic."""
    if duration < 1 or horizon < 2:
        raise InvalidArgument("delta_tilde needs T_j >= 1 and T >= 2")
    return math.sqrt(16.0 * k_prime * math.log(horizon) / duration)
