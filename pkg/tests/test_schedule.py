import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mabsim.errors import InvalidArgument
from mabsim.schedule import (
    EpochSchedule,
    PartitionSpec,
    delta_tilde,
    epoch_duration,
    initial_arm_set,
    k_prime,
    num_epochs,
    partition_matrix,
)


def float_epochs(horizon, kp, d=1):
    """Direct evaluation of floor(log2(T / (D K'(K'+1)) + 1)) in floating point."""
    return math.floor(math.log2(horizon / (d * kp * (kp + 1)) + 1))


# -- partitions -----------------------------------------------------------------

@pytest.mark.parametrize(
    "n, k, agents, expected",
    [
        (1, 100, 10, tuple(range(1, 11))),
        (3, 7, 3, (7, 1, 2)),
        (4, 4, 4, (4,)),
    ],
)
def test_initial_arm_set_examples(n, k, agents, expected):
    assert initial_arm_set(n, PartitionSpec(agents, k)) == expected


def test_initial_arm_set_range_checked():
    spec = PartitionSpec(3, 7)
    for bad in (0, 4):
        with pytest.raises(InvalidArgument):
            initial_arm_set(bad, spec)


def test_partition_spec_warns_when_agents_outnumber_arms(caplog):
    with caplog.at_level("WARNING"):
        spec = PartitionSpec(5, 3)
    assert "more agents" in caplog.text
    # still a total function: every agent gets one arm, all arms covered
    assert {a for n in range(1, 6) for a in initial_arm_set(n, spec)} == {1, 2, 3}


@given(k=st.integers(1, 300), data=st.data())
def test_matrix_agrees_with_per_agent_sets(k, data):
    n_agents = data.draw(st.integers(1, k))
    spec = PartitionSpec(n_agents, k)
    mat = partition_matrix(spec)
    for n in range(1, n_agents + 1):
        assert tuple(mat[n - 1]) == initial_arm_set(n, spec)
        assert len(initial_arm_set(n, spec)) <= spec.share


# -- K' and epochs --------------------------------------------------------------

def test_k_prime_examples():
    assert k_prime(PartitionSpec(10, 100)) == 19
    assert k_prime(PartitionSpec(100, 250), max_degree=14) == 17
    assert k_prime(PartitionSpec(1, 37)) == 37
    with pytest.raises(InvalidArgument):
        k_prime(PartitionSpec(4, 40), max_degree=0)


@pytest.mark.parametrize(
    "j, horizon, expected",
    [(0, 10**6, 380), (3, 10**6, 3040), (0, 100, 100), (9, 10**5, 0)],
)
def test_epoch_duration_examples(j, horizon, expected):
    assert epoch_duration(j, EpochSchedule(19, horizon)) == expected


def test_num_epochs_examples():
    assert num_epochs(10**5, 19) == 8
    assert num_epochs(380, 19) == 1
    assert num_epochs(379, 19) == 0
    sched = EpochSchedule(19, 379)
    assert sched.played_epochs() == 1 and sched.completed_epochs() == 0


def test_num_epochs_at_exact_epoch_boundaries():
    # exactly J full epochs fill 380 (2^J - 1) steps
    for j in range(1, 20):
        edge = 380 * ((1 << j) - 1)
        assert num_epochs(edge, 19) == j
        assert num_epochs(edge - 1, 19) == j - 1


def test_block_sequence_for_short_run():
    blocks = list(EpochSchedule(2, 20).blocks())
    assert [(b.epoch, b.start, b.duration) for b in blocks] == [(0, 0, 6), (1, 6, 12), (2, 18, 2)]
    assert [b.truncated for b in blocks] == [False, False, True]


def test_sub_epoch_blocks():
    blocks = list(EpochSchedule(2, 40, sub_epochs=2).blocks())
    assert [(b.epoch, b.sub_epoch, b.duration) for b in blocks] == [
        (0, 1, 6), (0, 2, 6), (1, 1, 12), (1, 2, 12), (2, 1, 4),
    ]
    assert EpochSchedule(2, 36, sub_epochs=2).completed_epochs() == 2


@given(horizon=st.integers(1, 10**7), kp=st.integers(1, 200), d=st.integers(1, 5))
def test_schedule_conservation_and_doubling(horizon, kp, d):
    sched = EpochSchedule(kp, horizon, d)
    blocks = list(sched.blocks())
    assert sum(b.duration for b in blocks) == horizon
    assert all(b.duration >= 1 for b in blocks)
    assert [b.truncated for b in blocks].count(True) <= 1 and not any(b.truncated for b in blocks[:-1])
    full = [b for b in blocks if not b.truncated]
    for prev, nxt in zip(full, full[1:]):
        assert nxt.duration == (2 * prev.duration if nxt.epoch > prev.epoch else prev.duration)
    # the contiguous iterator matches the closed-form first-sub-epoch duration
    for b in blocks:
        if b.sub_epoch == 1:
            assert epoch_duration(b.epoch, sched) == b.duration
    assert sched.completed_epochs() == num_epochs(horizon, kp, d)


@given(horizon=st.integers(1, 10**9), kp=st.integers(1, 1000))
def test_integer_epoch_count_matches_float_formula(horizon, kp):
    # the float formula can misround only when T / T0 + 1 is a power of two
    # to within rounding; the integer version is exact there
    ratio = horizon / (kp * (kp + 1)) + 1
    if abs(ratio - 2.0 ** round(math.log2(ratio))) > 1e-9:
        assert num_epochs(horizon, kp) == float_epochs(horizon, kp)


def test_schedule_validation():
    with pytest.raises(InvalidArgument):
        EpochSchedule(0, 10)
    with pytest.raises(InvalidArgument):
        EpochSchedule(3, 10, sub_epochs=0)
    with pytest.raises(InvalidArgument):
        num_epochs(0, 3)
    with pytest.raises(InvalidArgument):
        epoch_duration(-1, EpochSchedule(3, 10))


# -- delta tilde ----------------------------------------------------------------

def test_delta_tilde_examples():
    assert delta_tilde(19, 10**5, 380) == pytest.approx(3.0348, abs=5e-4)
    assert delta_tilde(1, math.e, 16) == pytest.approx(1.0, rel=1e-15)
    assert delta_tilde(19, 10**5, 4 * 380) == pytest.approx(delta_tilde(19, 10**5, 380) / 2, rel=1e-14)
    assert EpochSchedule(19, 10**5).delta_tilde(2) == delta_tilde(19, 10**5, 1520)


@pytest.mark.parametrize("horizon, dur", [(10, 0), (1, 5)])
def test_delta_tilde_domain(horizon, dur):
    with pytest.raises(InvalidArgument):
        delta_tilde(3, horizon, dur)


def test_partition_matrix_shape():
    mat = partition_matrix(PartitionSpec(3, 7))
    assert mat.shape == (3, 3)
    assert np.array_equal(mat[2], [7, 1, 2])
