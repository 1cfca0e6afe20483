"""Bandit environment and the single-agent UCB subroutine.

Arms are identified by 1-based global indices throughout the package; arrays
of per-arm quantities are 0-based, so arm ``i`` lives at position ``i - 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from mabsim._kernels import draw_reward, ucb_kernel
from mabsim.errors import InvalidArgument
from mabsim.rng import RngStream


class NoiseModel(str, enum.Enum):
    """Reward noise. Both variants are 1-sub-Gaussian around the arm mean."""

    BERNOULLI = "bernoulli"
    GAUSSIAN = "gaussian"

    @property
    def gaussian(self) -> bool:
        return self is NoiseModel.GAUSSIAN

    def draw(self, rng: RngStream, size: int) -> np.ndarray:
        """Raw noise for ``size`` pulls: uniforms for Bernoulli, N(0,1) otherwise."""
        if self is NoiseModel.GAUSSIAN:
            return rng.normal(size)
        return rng.uniform(size)


@dataclass(frozen=True, eq=False)
class BanditInstance:
    means: np.ndarray
    noise: NoiseModel = NoiseModel.BERNOULLI

    def __post_init__(self) -> None:
        means = np.array(self.means, dtype=np.float64)
        if means.ndim != 1 or means.size < 1:
            raise InvalidArgument("a bandit instance needs at least one arm")
        if np.any(~np.isfinite(means)) or np.any(means < 0.0) or np.any(means > 1.0):
            raise InvalidArgument("arm means must lie in [0, 1]")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "noise", NoiseModel(self.noise))

    @property
    def arm_count(self) -> int:
        return int(self.means.size)

    @property
    def best_mean(self) -> float:
        return float(self.means.max())

    @property
    def gaps(self) -> np.ndarray:
        """``best_mean - means`` for every arm, position ``i - 1`` for arm ``i``."""
        return self.best_mean - self.means

    def check_arm(self, arm: int) -> int:
        if not 1 <= arm <= self.arm_count:
            raise InvalidArgument(f"arm {arm} outside 1..{self.arm_count}")
        return int(arm)


def sample_means(k: int, rng: RngStream) -> np.ndarray:
    """K independent Uniform(0, 1) arm means."""
    if k < 1:
        raise InvalidArgument(f"arm count must be positive, got {k}")
    return rng.uniform(k)


def pull(instance: BanditInstance, arm: int, rng: RngStream) -> float:
    """One reward draw for ``arm``; advances ``rng`` by exactly one draw."""
    instance.check_arm(arm)
    noise = instance.noise.draw(rng, 1)[0]
    return float(draw_reward(instance.means[arm - 1], noise, instance.noise.gaussian))


def gap(instance: BanditInstance, arm: int) -> float:
    instance.check_arm(arm)
    return instance.best_mean - float(instance.means[arm - 1])


@dataclass(frozen=True)
class ArmStats:
    pulls: int = 0
    empirical_mean: float = 0.0


def ucb_index(stats: ArmStats, t: int) -> float:
    """Empirical mean plus ``sqrt(2 ln t / pulls)``; infinite for unpulled arms."""
    if stats.pulls == 0:
        return math.inf
    return stats.empirical_mean + math.sqrt(2.0 * math.log(t) / stats.pulls)


@dataclass
class UcbState:
    arms: tuple[int, ...]
    duration: int
    counts: np.ndarray = field(repr=False)
    means: np.ndarray = field(repr=False)

    @classmethod
    def empty(cls, arms: Sequence[int], duration: int) -> "UcbState":
        k = len(arms)
        return cls(tuple(arms), duration, np.zeros(k, np.int64), np.zeros(k))

    @property
    def local_step(self) -> int:
        return int(self.counts.sum())

    def stats(self, arm: int) -> ArmStats:
        pos = self.arms.index(arm)
        return ArmStats(int(self.counts[pos]), float(self.means[pos]))

    def most_played(self) -> int:
        # arms are ascending, so argmax's first-hit rule is the lowest-id tie-break
        return self.arms[int(np.argmax(self.counts))]


class UcbRun(NamedTuple):
    recommended: int
    state: UcbState
    pulled: np.ndarray
    rewards: np.ndarray


def normalize_arm_set(arms: Sequence[int]) -> np.ndarray:
    arr = np.asarray(sorted(arms), dtype=np.int64)
    if arr.size == 0:
        raise InvalidArgument("arm set is empty")
    if np.unique(arr).size != arr.size:
        raise InvalidArgument("arm set contains duplicates")
    return arr


def ucb_run(arms, duration: int, instance: BanditInstance, rng: RngStream) -> UcbRun:
    """Run UCB on ``arms`` for ``duration`` steps and recommend the most played arm.

    Draws exactly ``duration`` noise values from ``rng``.
    """
    arm_arr = normalize_arm_set(list(arms))
    if duration < 0:
        raise InvalidArgument(f"duration must be non-negative, got {duration}")
    for a in arm_arr:
        instance.check_arm(int(a))
    noise = instance.noise.draw(rng, duration)
    pulled, counts, mu, rewards = ucb_kernel(arm_arr, instance.means, noise, instance.noise.gaussian)
    state = UcbState(tuple(int(a) for a in arm_arr), duration, counts, mu)
    return UcbRun(state.most_played(), state, pulled, rewards)
