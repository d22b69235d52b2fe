"""Accuracy-band filtering of rollout groups and the buffered update schedule.

A group's accuracy is the fraction of its responses whose prefix-match
curve reached 1.0. Groups whose fraction falls inside the inclusive band
``[lower_bound, upper_bound]`` are buffered; a full buffer triggers
``updates_per_flush`` trainer calls on its contents and is then cleared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .grpo import RolloutGroup

Trainer = Callable[[Sequence[RolloutGroup]], object]


class FlushError(RuntimeError):
    """The trainer callback failed; the buffer was left untouched."""


@dataclass(frozen=True)
class FilterConfig:
    lower_bound: float = 0.1
    upper_bound: float = 0.9
    buffer_capacity: int = 16
    updates_per_flush: int = 1
    group_size: int = 8
    enabled: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.lower_bound <= self.upper_bound <= 1:
            raise ValueError("need 0 <= lower_bound <= upper_bound <= 1")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1")
        if self.updates_per_flush < 1:
            raise ValueError("updates_per_flush must be >= 1")
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")


def group_accuracy(group: RolloutGroup) -> tuple[int, float]:
    count = sum(ro.full_accuracy for ro in group.rollouts)
    return count, count / group.size


def accept(group: RolloutGroup, cfg: FilterConfig) -> bool:
    if not cfg.enabled:
        return True
    _, frac = group_accuracy(group)
    return cfg.lower_bound <= frac <= cfg.upper_bound


@dataclass
class MemoryBuffer:
    capacity: int
    groups: list[RolloutGroup] = field(default_factory=list)
    total_seen: int = 0
    total_accepted: int = 0
    flushes: int = 0
    trainer_calls: int = 0

    def __len__(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class FlushReport:
    flushed: bool
    steps_run: int
    results: tuple = ()


def push_and_maybe_flush(
    buffer: MemoryBuffer, group: RolloutGroup, cfg: FilterConfig, trainer: Trainer
) -> FlushReport:
    """Append an accepted group; on reaching capacity run the trainer K2 times and clear."""
    if len(buffer.groups) >= buffer.capacity:
        raise RuntimeError("buffer is already full; it should have been flushed")
    buffer.groups.append(group)
    if len(buffer.groups) < buffer.capacity:
        return FlushReport(False, 0)
    batch = tuple(buffer.groups)
    results = []
    try:
        for _ in range(cfg.updates_per_flush):
            results.append(trainer(batch))
    except Exception as exc:
        raise FlushError(f"trainer failed during flush: {exc}") from exc
    buffer.groups.clear()
    buffer.flushes += 1
    buffer.trainer_calls += len(results)
    return FlushReport(True, len(results), tuple(results))


def offer(buffer: MemoryBuffer, group: RolloutGroup, cfg: FilterConfig, trainer: Trainer) -> tuple[bool, FlushReport]:
    """Count the group, and buffer it if it passes the filter."""
    buffer.total_seen += 1
    if not accept(group, cfg):
        return False, FlushReport(False, 0)
    buffer.total_accepted += 1
    return True, push_and_maybe_flush(buffer, group, cfg, trainer)
