import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from embodied_rft.filtering import (
    FilterConfig,
    FlushError,
    MemoryBuffer,
    accept,
    group_accuracy,
    offer,
    push_and_maybe_flush,
)
from embodied_rft.grpo import Rollout, RolloutGroup


def group(n_correct, G=8, gid="g"):
    ro = [
        Rollout(np.ones((1, 1)), [0], [0.0], reward=1.5 if i < n_correct else 0.3, accuracy=1.0 if i < n_correct else 0.2)
        for i in range(G)
    ]
    return RolloutGroup(gid, ro)


class CountingTrainer:
    def __init__(self):
        self.calls = []

    def __call__(self, batch):
        self.calls.append(tuple(g.prompt_id for g in batch))
        return len(self.calls)


def test_group_accuracy_examples():
    assert group_accuracy(group(8)) == (8, 1.0)
    assert group_accuracy(group(0)) == (0, 0.0)
    assert group_accuracy(group(3)) == (3, 0.375)


def test_full_accuracy_ignores_the_single_step_penalty():
    # curve 1.0 with the -0.25 penalty still counts as a fully correct response
    ro = Rollout(np.ones((1, 1)), [0], [0.0], reward=1.25, accuracy=0.75, full=True)
    assert ro.full_accuracy
    assert not Rollout(np.ones((1, 1)), [0], [0.0], reward=1.25, accuracy=0.75).full_accuracy


@pytest.mark.parametrize("n, expected", [(0, False), (8, False), (4, True), (1, True), (7, True)])
def test_accept_with_default_band(n, expected):
    assert accept(group(n), FilterConfig()) is expected


def test_bounds_are_inclusive_and_filter_can_be_disabled():
    cfg = FilterConfig(lower_bound=0.25, upper_bound=0.5)
    assert [accept(group(n), cfg) for n in range(9)] == [False, False, True, True, True, False, False, False, False]
    assert all(accept(group(n), FilterConfig(enabled=False)) for n in range(9))


def test_config_validation():
    for bad in [dict(lower_bound=0.6, upper_bound=0.5), dict(upper_bound=1.1), dict(buffer_capacity=0),
                dict(updates_per_flush=0), dict(group_size=1)]:
        with pytest.raises(ValueError):
            FilterConfig(**bad)


def test_flush_on_fourth_group():
    cfg = FilterConfig(buffer_capacity=4, updates_per_flush=3)
    buf, trainer = MemoryBuffer(4), CountingTrainer()
    for i in range(3):
        rep = push_and_maybe_flush(buf, group(4, gid=f"g{i}"), cfg, trainer)
        assert not rep.flushed and rep.steps_run == 0
    rep = push_and_maybe_flush(buf, group(4, gid="g3"), cfg, trainer)
    assert rep.flushed and rep.steps_run == 3 and rep.results == (1, 2, 3)
    assert len(buf) == 0 and buf.flushes == 1 and buf.trainer_calls == 3
    assert trainer.calls == [("g0", "g1", "g2", "g3")] * 3


def test_capacity_one_flushes_every_group():
    cfg = FilterConfig(buffer_capacity=1)
    buf, trainer = MemoryBuffer(1), CountingTrainer()
    for i in range(5):
        assert push_and_maybe_flush(buf, group(2, gid=str(i)), cfg, trainer).flushed
    assert len(trainer.calls) == 5


def test_failed_trainer_leaves_buffer_intact():
    cfg = FilterConfig(buffer_capacity=2)
    buf = MemoryBuffer(2)

    def boom(batch):
        raise FloatingPointError("nan loss")

    push_and_maybe_flush(buf, group(3, gid="a"), cfg, boom)
    with pytest.raises(FlushError, match="nan loss"):
        push_and_maybe_flush(buf, group(3, gid="b"), cfg, boom)
    assert [g.prompt_id for g in buf.groups] == ["a", "b"]
    assert buf.flushes == 0 and buf.trainer_calls == 0


@given(st.lists(st.integers(0, 8), max_size=80), st.integers(1, 6), st.integers(1, 3))
def test_trace_invariants(counts, capacity, k2):
    cfg = FilterConfig(buffer_capacity=capacity, updates_per_flush=k2)
    buf, trainer = MemoryBuffer(capacity), CountingTrainer()
    for c in counts:
        offer(buf, group(c), cfg, trainer)
        assert len(buf) <= capacity
        for g in buf.groups:
            assert cfg.lower_bound <= group_accuracy(g)[1] <= cfg.upper_bound
    assert buf.total_seen == len(counts)
    assert buf.total_accepted == sum(1 <= c <= 7 for c in counts)
    assert buf.trainer_calls == len(trainer.calls) == k2 * buf.flushes


@given(
    st.integers(0, 8),
    st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
)
def test_widening_the_band_never_rejects_more(c, a, b, da, db):
    lo, hi = sorted((a, b))
    narrow = FilterConfig(lower_bound=lo, upper_bound=hi)
    wide = FilterConfig(lower_bound=lo * (1 - da), upper_bound=hi + (1 - hi) * db)
    if accept(group(c), narrow):
        assert accept(group(c), wide)


@pytest.mark.parametrize("p", [0.05, 0.3, 0.7, 0.95])
def test_acceptance_rate_matches_binomial_band(p):
    rng = np.random.default_rng(int(p * 100))
    G, n_groups = 8, 10_000
    cfg = FilterConfig()
    counts = rng.binomial(1, p, size=(n_groups, G)).sum(axis=1)
    rate = np.mean([accept(group(int(c), G), cfg) for c in counts])
    lo, hi = math.ceil(cfg.lower_bound * G), math.floor(cfg.upper_bound * G)
    expected = sum(math.comb(G, j) * p**j * (1 - p) ** (G - j) for j in range(lo, hi + 1))
    se = math.sqrt(expected * (1 - expected) / n_groups)
    assert abs(rate - expected) <= 3 * se
