"""Run configuration: defaults < config file < environment < command-line flags.

Every key is a field of :class:`RunConfig`. Files may be YAML or JSON (flat
mapping). Environment overrides use ``ERFT_<KEY>`` in upper case, e.g.
``ERFT_ACTOR_LEARNING_RATE=0.3``.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .evaluation import EvalLimits
from .filtering import FilterConfig
from .grpo import GrpoConfig

ENV_PREFIX = "ERFT_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    # supervised warm start
    sft_tasks: int = 40
    sft_epochs: int = 100
    sft_learning_rate: float = 2.0
    # reinforcement fine-tuning
    rft_tasks: int = 400
    rft_steps: int = 200
    train_difficulty: str = "base"
    rollout_batch_size: int = 8
    n_samples_per_prompt: int = 8
    temperature: float = 1.0
    generate_max_len: int = 20
    actor_learning_rate: float = 0.05
    init_kl_coef: float = 0.0
    clip_epsilon: float = 0.2
    ratio: str = "step"
    momentum: float = 0.0
    enable_accuracy_filter: bool = True
    accuracy_lower_bound: float = 0.1
    accuracy_upper_bound: float = 0.9
    buffer_size: int = 16
    updates_per_flush: int = 1
    checkpoint_every: int = 50
    # evaluation
    eval_tasks: int = 200
    eval_seed: int = 100000
    eval_difficulty: str = "base"
    max_env_steps: int = 30
    max_plan_len: int = 20
    max_replans: int = 5

    def __post_init__(self) -> None:
        for name in ("sft_tasks", "sft_epochs", "rft_tasks", "rft_steps", "eval_tasks"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.rollout_batch_size < 1:
            raise ConfigError("rollout_batch_size must be >= 1")
        if self.rft_steps > 0 and self.rollout_batch_size > self.rft_tasks:
            raise ConfigError("rollout_batch_size exceeds the number of RFT tasks")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        for name in ("train_difficulty", "eval_difficulty"):
            if getattr(self, name) not in ("base", "long_horizon"):
                raise ConfigError(f"{name} must be 'base' or 'long_horizon'")
        try:
            self.grpo()
            self.filter()
            self.limits()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def grpo(self) -> GrpoConfig:
        return GrpoConfig(
            group_size=self.n_samples_per_prompt,
            clip_epsilon=self.clip_epsilon,
            kl_beta=self.init_kl_coef,
            learning_rate=self.actor_learning_rate,
            temperature=self.temperature,
            updates_per_buffer=self.updates_per_flush,
            max_generate_len=self.generate_max_len,
            ratio=self.ratio,
            momentum=self.momentum,
        )

    def filter(self) -> FilterConfig:
        return FilterConfig(
            lower_bound=self.accuracy_lower_bound,
            upper_bound=self.accuracy_upper_bound,
            buffer_capacity=self.buffer_size,
            updates_per_flush=self.updates_per_flush,
            group_size=self.n_samples_per_prompt,
            enabled=self.enable_accuracy_filter,
        )

    def limits(self) -> EvalLimits:
        return EvalLimits(self.max_env_steps, self.max_plan_len, self.max_replans)

    def replace(self, **changes: Any) -> "RunConfig":
        return dataclasses.replace(self, **coerce(changes))

    def to_yaml(self) -> str:
        return yaml.safe_dump(asdict(self), sort_keys=False)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce_value(key: str, value: Any) -> Any:
    kind = FIELD_TYPES[key]
    if kind == "bool":
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    try:
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "float":
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind}, got {value!r}") from None
    return str(value)


def coerce(values: Mapping[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in values.items():
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce_value(key, value)
    return out


def load_file(path: str | Path) -> dict[str, Any]:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of keys to values")
    return data


def from_env(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for key in FIELD_TYPES:
        name = ENV_PREFIX + key.upper()
        if name in environ:
            out[key] = environ[name]
    return out


def resolve(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    merged: dict[str, Any] = {}
    if path is not None:
        merged.update(coerce(load_file(path)))
    merged.update(coerce(from_env(environ)))
    merged.update(coerce({k: v for k, v in (overrides or {}).items() if v is not None}))
    return RunConfig(**merged)


def demo_config_path() -> Path:
    return Path(__file__).parent / "data" / "demo_config.yaml"
