"""Group-relative policy optimization over a differentiable decision policy.

For a group of G responses to one prompt with rewards r_i:

    A_i  = (r_i - mean(r)) / popstd(r)          (all zero when popstd < 1e-8)
    loss = -(1/G) sum_i [ S_i * A_i - beta * KL_i ]

where S_i is the clipped likelihood ratio against the sampling policy. With
``ratio="step"`` it is the mean over decisions of clip(exp(logp_t - old_t));
with ``ratio="sequence"`` it is clip(exp(sum_t logp_t - sum_t old_t)).
KL_i is the k3 estimator averaged over decisions,
mean_t(exp(ref_t - logp_t) - (ref_t - logp_t) - 1).

Clipping is applied literally, so a ratio outside [1 - eps, 1 + eps]
contributes no gradient regardless of the advantage's sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

DEGENERATE_STD = 1e-8


class PolicyInterface(Protocol):
    """What the optimizer needs from a policy: per-decision log-probs and their gradient."""

    params: np.ndarray

    def log_probs(self, feats: np.ndarray, actions: Sequence[int]) -> np.ndarray: ...

    def grad_log_probs(self, feats: np.ndarray, actions: Sequence[int], step_weights: np.ndarray) -> np.ndarray: ...


class NumericalError(FloatingPointError):
    """A non-finite loss or gradient; ``group_id`` names the offending group."""

    def __init__(self, group_id: str, what: str):
        super().__init__(f"non-finite {what} in group {group_id!r}")
        self.group_id = group_id


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    clip_epsilon: float = 0.2
    kl_beta: float = 0.0
    learning_rate: float = 0.05
    temperature: float = 1.0
    updates_per_buffer: int = 1
    max_generate_len: int = 20
    ratio: str = "step"
    momentum: float = 0.0

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if self.clip_epsilon <= 0:
            raise ValueError("clip_epsilon must be positive")
        if self.kl_beta < 0:
            raise ValueError("kl_beta must be non-negative")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.updates_per_buffer < 1:
            raise ValueError("updates_per_buffer must be >= 1")
        if self.max_generate_len < 1:
            raise ValueError("max_generate_len must be >= 1")
        if self.ratio not in ("step", "sequence"):
            raise ValueError("ratio must be 'step' or 'sequence'")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class Rollout:
    """One sampled response: its decisions, their features and sampling-time log-probs."""

    feats: np.ndarray
    actions: np.ndarray
    old_logp: np.ndarray
    reward: float
    accuracy: float = 0.0
    length: int = 0
    text: str = ""
    full: bool | None = None  # fully correct; defaults to ``accuracy == 1.0``

    def __post_init__(self) -> None:
        if self.full is None:
            self.full = self.accuracy == 1.0
        self.feats = np.atleast_2d(np.asarray(self.feats, dtype=np.float64))
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.old_logp = np.asarray(self.old_logp, dtype=np.float64)
        if not (len(self.feats) == len(self.actions) == len(self.old_logp)) or len(self.actions) == 0:
            raise ValueError("rollout needs one feature row and one old log-prob per decision")

    @property
    def full_accuracy(self) -> bool:
        return bool(self.full)


@dataclass
class RolloutGroup:
    prompt_id: str
    rollouts: list[Rollout]
    advantages: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.advantages is None:
            self.advantages = compute_advantages(self.rewards)
        self.advantages = np.asarray(self.advantages, dtype=np.float64)
        if len(self.advantages) != len(self.rollouts):
            raise ValueError("one advantage per rollout required")

    @property
    def size(self) -> int:
        return len(self.rollouts)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([r.reward for r in self.rollouts], dtype=np.float64)

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([r.accuracy for r in self.rollouts], dtype=np.float64)


def compute_advantages(rewards: Sequence[float]) -> np.ndarray:
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise ValueError("advantages need a group of at least 2 rewards")
    std = r.std()  # population std (ddof=0)
    if std < DEGENERATE_STD:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def kl_k3(logp: np.ndarray, ref_logp: np.ndarray) -> float:
    d = np.asarray(ref_logp) - np.asarray(logp)
    return float(np.mean(np.exp(d) - d - 1.0))


def _rollout_terms(ro: Rollout, adv: float, logp: np.ndarray, ref_logp, cfg: GrpoConfig):
    """Objective contribution J_i and d J_i / d logp_t for one rollout."""
    lo, hi = 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon
    T = len(logp)
    if cfg.ratio == "step":
        ratio = np.exp(logp - ro.old_logp)
        clipped = np.clip(ratio, lo, hi)
        inside = (ratio > lo) & (ratio < hi)
        obj = float(clipped.mean()) * adv
        dobj = np.where(inside, ratio, 0.0) * adv / T
    else:
        ratio = float(np.exp(logp.sum() - ro.old_logp.sum()))
        obj = min(max(ratio, lo), hi) * adv
        dobj = np.full(T, ratio * adv if lo < ratio < hi else 0.0)
    if cfg.kl_beta > 0:
        d = ref_logp - logp
        obj -= cfg.kl_beta * float(np.mean(np.exp(d) - d - 1.0))
        dobj = dobj - cfg.kl_beta * (1.0 - np.exp(d)) / T
    return obj, dobj


def grpo_loss(
    group: RolloutGroup,
    policy: PolicyInterface,
    ref_policy: PolicyInterface | None,
    cfg: GrpoConfig,
) -> tuple[float, np.ndarray]:
    """Loss and its gradient w.r.t. ``policy.params`` for one group."""
    if group.size != len(group.advantages):
        raise ValueError("group size and advantage count differ")
    if cfg.kl_beta > 0 and ref_policy is None:
        raise ValueError("kl_beta > 0 needs a reference policy")
    G = group.size
    loss = 0.0
    grad = np.zeros_like(policy.params)
    for ro, adv in zip(group.rollouts, group.advantages):
        logp = policy.log_probs(ro.feats, ro.actions)
        ref_logp = ref_policy.log_probs(ro.feats, ro.actions) if cfg.kl_beta > 0 else None
        obj, dobj = _rollout_terms(ro, float(adv), logp, ref_logp, cfg)
        loss -= obj / G
        if np.any(dobj != 0):
            grad -= policy.grad_log_probs(ro.feats, ro.actions, dobj / G)
    return loss, grad


@dataclass(frozen=True)
class UpdateReport:
    mean_reward: float
    loss: float
    grad_norm: float
    param_delta_norm: float


class Optimizer:
    """Gradient descent with optional heavy-ball momentum."""

    def __init__(self, learning_rate: float, momentum: float = 0.0):
        self.learning_rate = float(learning_rate)
        self.momentum = float(momentum)
        self.velocity: np.ndarray | None = None

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.momentum > 0:
            if self.velocity is None:
                self.velocity = np.zeros_like(params)
            self.velocity = self.momentum * self.velocity + grad
            grad = self.velocity
        return params - self.learning_rate * grad


def train_step(
    groups: Sequence[RolloutGroup],
    policy: PolicyInterface,
    ref_policy: PolicyInterface | None,
    cfg: GrpoConfig,
    optimizer: Optimizer | None = None,
) -> UpdateReport:
    """One descent step on the mean group loss; aborts before touching params on NaN/inf."""
    if not groups:
        raise ValueError("train_step needs at least one group")
    optimizer = optimizer or Optimizer(cfg.learning_rate, cfg.momentum)
    total_loss = 0.0
    total_grad = np.zeros_like(policy.params)
    for g in groups:
        loss, grad = grpo_loss(g, policy, ref_policy, cfg)
        if not np.isfinite(loss):
            raise NumericalError(g.prompt_id, "loss")
        if not np.all(np.isfinite(grad)):
            raise NumericalError(g.prompt_id, "gradient")
        total_loss += loss
        total_grad += grad
    n = len(groups)
    total_loss /= n
    total_grad /= n
    before = policy.params.copy()
    policy.params = optimizer.step(before, total_grad)
    mean_reward = float(np.mean([g.rewards.mean() for g in groups]))
    return UpdateReport(
        mean_reward=mean_reward,
        loss=float(total_loss),
        grad_norm=float(np.linalg.norm(total_grad)),
        param_delta_norm=float(np.linalg.norm(policy.params - before)),
    )


# --- supervised warm start ----------------------------------------------------


@dataclass(frozen=True)
class Demo:
    """A gold decision sequence with its per-decision features."""

    feats: np.ndarray
    actions: np.ndarray


def encode_samples(samples) -> list[Demo]:
    """Turn toy-simulator TrainingSamples into demos (answer plus a final STOP)."""
    from .policy import context_from_ref, encode_demo

    demos = []
    for s in samples:
        ctx = context_from_ref(s.observation_ref, s.history)
        feats, actions = encode_demo(ctx, s.answer.actions)
        demos.append(Demo(feats, actions))
    return demos


def stack_demos(demos: Sequence[Demo]) -> Demo:
    return Demo(np.concatenate([d.feats for d in demos]), np.concatenate([d.actions for d in demos]))


def behavior_clone_step(demos, policy: PolicyInterface, learning_rate: float) -> float:
    """One gradient step on the mean per-decision NLL of the gold sequences.

    ``demos`` may be Demo objects (or one stacked Demo) or toy TrainingSamples.
    Returns the NLL measured before the update.
    """
    if isinstance(demos, Demo):
        batch = demos
    else:
        demos = list(demos)
        if not demos:
            raise ValueError("behavior cloning needs at least one sample")
        if not isinstance(demos[0], Demo):
            demos = encode_samples(demos)
        batch = stack_demos(demos)
    logp = policy.log_probs(batch.feats, batch.actions)
    n = len(batch.actions)
    grad = policy.grad_log_probs(batch.feats, batch.actions, np.full(n, 1.0 / n))
    policy.params = policy.params + learning_rate * grad
    return float(-logp.mean())
