"""Reinforcement fine-tuning for multi-step embodied planning at desk scale.

Modules:

* :mod:`.catalog`     action catalogs and (id, name) consistency checks
* :mod:`.response`    tolerant parsing of structured JSON plan responses
* :mod:`.reward`      composite format + prefix-accuracy reward
* :mod:`.dataset`     trajectory decomposition into prompt/answer samples (JSONL)
* :mod:`.grpo`        group-relative advantages, clipped surrogate, KL penalty
* :mod:`.filtering`   accuracy-band group filter and staging buffer
* :mod:`.sim`         deterministic toy household simulator and oracle planner
* :mod:`.policy`      linear-softmax plan policy used as the trainable model
* :mod:`.evaluation`  replan-on-failure evaluation, SR / PR / ES
* :mod:`.training`    warm start + filtered GRPO loop, checkpoints, ablations
* :mod:`.report`      static plots from run directories
* :mod:`.cli`         the ``erft`` command
"""

from .catalog import ActionCatalog, bundled_catalog, load_catalog
from .grpo import GrpoConfig, Rollout, RolloutGroup, compute_advantages, grpo_loss
from .reward import ReferenceAnswer, RewardBreakdown, allocation_curve, score_response, total_reward

__version__ = "0.1.0"

__all__ = [
    "ActionCatalog",
    "GrpoConfig",
    "ReferenceAnswer",
    "RewardBreakdown",
    "Rollout",
    "RolloutGroup",
    "allocation_curve",
    "bundled_catalog",
    "compute_advantages",
    "grpo_loss",
    "load_catalog",
    "score_response",
    "total_reward",
]
