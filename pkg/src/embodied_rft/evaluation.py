"""Closed-loop evaluation with replanning, and SR / PR / ES aggregation.

A planner maps (task, current state, executed history, feedback log, attempt
index) to raw response text. The harness parses it and executes the plan one
action at a time. An invalid action, an unparseable or ill-formed step, or running out of
plan without success sends control back to the planner from the current
state. An episode ends on success, when the step budget is spent, or when
the replan budget is spent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import sim
from .policy import PlanContext, sample_plan
from .response import parse_response, plan_names, render_response
from .sim import TOY_CATALOG, SceneState, TaskSpec

Planner = Callable[[TaskSpec, SceneState, tuple, tuple, int], str]


@dataclass(frozen=True)
class EvalLimits:
    max_env_steps: int = 30
    max_plan_len: int = 20
    max_replans: int = 5

    def __post_init__(self) -> None:
        if self.max_env_steps < 1 or self.max_plan_len < 1 or self.max_replans < 0:
            raise ValueError("evaluation limits must be positive (max_replans >= 0)")


@dataclass
class EpisodeResult:
    task_id: str
    success: bool
    satisfied: int
    total: int
    env_steps: int
    replans: int
    transcript: list[tuple[str, str]] = field(default_factory=list)

    @property
    def progress_rate(self) -> float:
        return self.satisfied / self.total


@dataclass(frozen=True)
class EvalSummary:
    n_tasks: int
    success_rate: float
    progress_rate: float
    env_steps: float

    def as_percent(self) -> dict:
        return {"SR": 100 * self.success_rate, "PR": 100 * self.progress_rate, "ES": self.env_steps}


def run_episode(planner: Planner, task: TaskSpec, scene: SceneState, limits: EvalLimits) -> EpisodeResult:
    state = scene
    history: list[str] = []
    transcript: list[tuple[str, str]] = []
    replans = 0
    while True:
        text = planner(task, state, tuple(history), tuple(transcript), replans)
        names = plan_names(parse_response(text))[: limits.max_plan_len]
        for name in names:
            if len(transcript) >= limits.max_env_steps:
                break
            action = TOY_CATALOG.get_name(name) if name is not None else None
            if action is None:
                transcript.append((name or "<ill-formed>", sim.Feedback.invalid("unknown action").message))
                break
            state, fb = sim.step(state, action)
            transcript.append((action.name, fb.message))
            if not fb.ok:
                break
            history.append(action.name)
            if sim.is_success(state, task):
                break
        if sim.is_success(state, task) or len(transcript) >= limits.max_env_steps:
            break
        if replans >= limits.max_replans:
            break
        replans += 1
    sat, tot = sim.check_goal(state, task)
    return EpisodeResult(task.task_id, sat == tot, sat, tot, len(transcript), replans, transcript)


def summarize(results: Sequence[EpisodeResult]) -> EvalSummary:
    if not results:
        return EvalSummary(0, 0.0, 0.0, 0.0)
    return EvalSummary(
        n_tasks=len(results),
        success_rate=float(np.mean([r.success for r in results])),
        progress_rate=float(np.mean([r.progress_rate for r in results])),
        env_steps=float(np.mean([r.env_steps for r in results])),
    )


def evaluate_policy(
    planner: Planner,
    tasks: Sequence[TaskSpec],
    limits: EvalLimits = EvalLimits(),
    scenes: Sequence[SceneState] | None = None,
) -> tuple[list[EpisodeResult], EvalSummary]:
    if scenes is None:
        scenes = [sim.scene_for(t) for t in tasks]
    results = [run_episode(planner, t, s, limits) for t, s in zip(tasks, scenes)]
    return results, summarize(results)


def write_eval_csv(results: Sequence[EpisodeResult], summary: EvalSummary, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["task_id", "success", "progress_rate", "env_steps", "replans"])
        for r in results:
            w.writerow([r.task_id, int(r.success), f"{r.progress_rate:.6f}", r.env_steps, r.replans])
        w.writerow(["ALL", f"{summary.success_rate:.6f}", f"{summary.progress_rate:.6f}", f"{summary.env_steps:.6f}", ""])


# --- planners ---------------------------------------------------------------------


def _steps(names: Sequence[str]) -> list[tuple[int, str]]:
    return [(TOY_CATALOG.by_name(n).id, TOY_CATALOG.by_name(n).name) for n in names]


def oracle_planner(task: TaskSpec, state: SceneState, history: tuple, transcript: tuple, attempt: int = 0) -> str:
    return render_response(_steps(sim.oracle_actions(task, state)), visual=sim.observe(state))


def empty_planner(task: TaskSpec, state: SceneState, history: tuple, transcript: tuple, attempt: int = 0) -> str:
    return render_response([], visual=sim.observe(state))


class RandomPlanner:
    """Plans of uniform length 1..max_len with uniformly drawn catalog actions."""

    def __init__(self, rng: np.random.Generator, max_len: int = 20):
        self.rng = rng
        self.max_len = max_len

    def __call__(self, task, state, history, transcript, attempt: int = 0) -> str:
        n = int(self.rng.integers(1, self.max_len + 1))
        ids = self.rng.integers(0, TOY_CATALOG.size, size=n)
        return render_response([(int(i), TOY_CATALOG.by_id(int(i)).name) for i in ids])


class PolicyPlanner:
    """Greedy first plan; replans are sampled so a retry can differ from the failed plan."""

    def __init__(self, policy, rng: np.random.Generator | None = None, max_len: int = 20, replan_temperature: float = 1.0):
        self.policy = policy
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.max_len = max_len
        self.replan_temperature = replan_temperature

    def __call__(self, task, state, history, transcript, attempt: int = 0) -> str:
        temperature = 0.0 if attempt == 0 else self.replan_temperature
        ctx = PlanContext(task, state, tuple(history))
        return sample_plan(self.policy, ctx, self.rng, max_len=self.max_len, temperature=temperature).text
