"""Composite rule-based reward: format reward plus prefix-matched accuracy.

    total = r_structure + r_valid + r_match + R(n; k) + single_step_penalty

with R(n; k) = n (n + 1) / (k (k + 1)) the triangular allocation curve over
the matched prefix length n of a reference of length k.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

from .catalog import ActionCatalog, match_pair, normalize_name
from .response import PlanResponse, parse_response, plan_names

STRUCTURE_WEIGHT = 0.125
VALID_WEIGHT = 0.125
MATCH_WEIGHT = 0.25
SINGLE_STEP_PENALTY = -0.25
MAX_TOTAL = STRUCTURE_WEIGHT + VALID_WEIGHT + MATCH_WEIGHT + 1.0


@dataclass(frozen=True)
class ReferenceAnswer:
    """Gold action suffix. Actions are stored normalized."""

    actions: tuple[str, ...]

    def __post_init__(self) -> None:
        acts = tuple(normalize_name(a) for a in self.actions)
        if not acts:
            raise ValueError("reference answer needs at least one action")
        if any(not a for a in acts):
            raise ValueError("reference answer contains an empty action")
        object.__setattr__(self, "actions", acts)

    @property
    def k(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class RewardBreakdown:
    r_structure: float
    r_valid: float
    r_match: float
    matched_prefix_n: int
    r_accuracy_curve: float
    single_step_penalty: float
    total: float

    @property
    def r_format(self) -> float:
        return self.r_structure + self.r_valid + self.r_match

    @property
    def r_accuracy(self) -> float:
        return self.r_accuracy_curve + self.single_step_penalty

    @property
    def full_accuracy(self) -> bool:
        return self.r_accuracy_curve == 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def format_reward(
    resp: PlanResponse, catalog: ActionCatalog, *, strict_names: bool = False
) -> tuple[float, float, float]:
    r_structure = STRUCTURE_WEIGHT if resp.has_all_top_level_fields else 0.0
    total = resp.n_steps
    if total == 0:
        return r_structure, 0.0, 0.0
    matched = sum(
        step.well_formed and match_pair(catalog, step.action_id, step.action_name, strict=strict_names)
        for step in resp.executable_plan
    )
    return r_structure, VALID_WEIGHT * resp.n_well_formed / total, MATCH_WEIGHT * matched / total


def prefix_match(predicted: Sequence[str | None], reference: ReferenceAnswer) -> int:
    """Length of the matched prefix; ``None`` entries (ill-formed steps) never match."""
    n = 0
    for pred, gold in zip(predicted, reference.actions):
        if pred is None or normalize_name(pred) != gold:
            break
        n += 1
    return n


def allocation_curve(n: int, k: int) -> float:
    if k < 1:
        raise ValueError(f"reference length must be >= 1, got {k}")
    if n < 0 or n > k:
        raise ValueError(f"matched prefix {n} outside [0, {k}]")
    return n * (n + 1) / (k * (k + 1))


def accuracy_reward(
    predicted: Sequence[str | None], reference: ReferenceAnswer
) -> tuple[float, float, int]:
    """Return ``(curve, penalty, n)`` for a predicted sequence.

    ``predicted`` holds one entry per emitted plan step (ill-formed steps as
    ``None``), so its length is the emitted step count used by the penalty.
    """
    n = prefix_match(predicted, reference)
    penalty = SINGLE_STEP_PENALTY if reference.k == 1 and len(predicted) > 1 else 0.0
    return allocation_curve(n, reference.k), penalty, n


def score_response(
    resp: PlanResponse, reference: ReferenceAnswer, catalog: ActionCatalog, *, strict_names: bool = False
) -> RewardBreakdown:
    r_structure, r_valid, r_match = format_reward(resp, catalog, strict_names=strict_names)
    curve, penalty, n = accuracy_reward(plan_names(resp), reference)
    total = r_structure + r_valid + r_match + curve + penalty
    return RewardBreakdown(r_structure, r_valid, r_match, n, curve, penalty, total)


def total_reward(
    raw_response: str,
    reference: ReferenceAnswer,
    catalog: ActionCatalog,
    *,
    require_nonempty: bool = False,
    strict_names: bool = False,
) -> RewardBreakdown:
    resp = parse_response(raw_response, require_nonempty=require_nonempty)
    return score_response(resp, reference, catalog, strict_names=strict_names)
