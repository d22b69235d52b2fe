"""Trajectory decomposition into RFT training samples, plus the JSONL format.

A trajectory with k actions becomes k samples. Sample n (1-based) shows the
goal and the first n-1 actions as history, the observation before action n,
and asks for the remaining actions a_n .. a_k as the reference answer.

Each JSONL line carries ``id``, ``question``, ``answer`` (a Python-style list
literal string) and ``message`` (chat wrapper: system text plus a user turn
with an image part and a text part). Structured copies of the answer and the
decomposition metadata ride along under extra keys so that reading a file
back does not depend on parsing the list literal.
"""

from __future__ import annotations

import ast
import json
import logging
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .catalog import ActionCatalog, normalize_name
from .reward import ReferenceAnswer

log = logging.getLogger(__name__)

REQUIRED_PLACEHOLDERS = ("goal", "history", "catalog")
SYSTEM_PROMPT = "You are a household robot planner. Reply with a single JSON object."


class DatasetError(ValueError):
    """Bad trajectories, templates or dataset files."""


@dataclass(frozen=True)
class Trajectory:
    """Goal plus alternating (observation, action) steps."""

    traj_id: str
    goal: str
    steps: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise DatasetError(f"trajectory {self.traj_id!r} has no actions")
        steps = tuple((str(o), normalize_name(a)) for o, a in self.steps)
        if any(not a for _, a in steps):
            raise DatasetError(f"trajectory {self.traj_id!r} contains an empty action")
        object.__setattr__(self, "steps", steps)

    @property
    def k(self) -> int:
        return len(self.steps)

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(a for _, a in self.steps)

    @property
    def observations(self) -> tuple[str, ...]:
        return tuple(o for o, _ in self.steps)

    def to_dict(self) -> dict:
        return {
            "id": self.traj_id,
            "goal": self.goal,
            "steps": [{"observation": o, "action": a} for o, a in self.steps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        try:
            steps = tuple((s["observation"], s["action"]) for s in d["steps"])
            return cls(d["id"], d["goal"], steps)
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"malformed trajectory record: {exc}") from None


@dataclass(frozen=True)
class PromptTemplate:
    """``string.Template``-style text with ``$goal``, ``$history`` and ``$catalog``."""

    text: str

    def __post_init__(self) -> None:
        found = {
            m.group("named") or m.group("braced")
            for m in string.Template.pattern.finditer(self.text)
            if m.group("named") or m.group("braced")
        }
        missing = [p for p in REQUIRED_PLACEHOLDERS if p not in found]
        if missing:
            raise DatasetError(f"prompt template lacks placeholder(s): {', '.join(missing)}")

    @classmethod
    def load(cls, path: str | Path) -> "PromptTemplate":
        try:
            return cls(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DatasetError(f"cannot read template {path}: {exc}") from exc

    def render(self, goal: str, history: Sequence[str], catalog: ActionCatalog) -> str:
        hist = ", ".join(f"{i + 1}. {a}" for i, a in enumerate(history)) or "none"
        return string.Template(self.text).substitute(goal=goal, history=hist, catalog=catalog.render_list())


def default_template() -> PromptTemplate:
    return PromptTemplate.load(Path(__file__).parent / "data" / "rft_prompt.txt")


@dataclass(frozen=True)
class TrainingSample:
    id: str
    instruction: str
    observation_ref: str
    answer: ReferenceAnswer
    source_step: int
    goal: str
    history: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "history", tuple(self.history))
        if len(self.history) != self.source_step - 1:
            raise DatasetError(
                f"sample {self.id!r}: step {self.source_step} needs {self.source_step - 1} history actions"
            )


def sample_id(traj_id: str, n: int) -> str:
    return f"{traj_id}_remain_{n - 1}"


def decompose(traj: Trajectory, template: PromptTemplate, catalog: ActionCatalog) -> list[TrainingSample]:
    """One sample per action: history a_0..a_{n-2}, answer a_{n-1}..a_{k-1}."""
    acts = traj.actions
    out = []
    for n in range(1, traj.k + 1):
        history = acts[: n - 1]
        out.append(
            TrainingSample(
                id=sample_id(traj.traj_id, n),
                instruction=template.render(traj.goal, history, catalog),
                observation_ref=traj.steps[n - 1][0],
                answer=ReferenceAnswer(acts[n - 1 :]),
                source_step=n,
                goal=traj.goal,
                history=history,
            )
        )
    return out


def render_answer(actions: Sequence[str]) -> str:
    """List-literal form, e.g. ``"['Goto garbagecan', 'Put handtowel']"``."""
    return repr([str(a) for a in actions])


def parse_answer(value) -> list[str]:
    """Accept either a JSON array of strings or its list-literal rendering."""
    if isinstance(value, str):
        try:
            value = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            raise DatasetError(f"answer is not a list literal: {value[:60]!r}") from None
    if not isinstance(value, list) or not all(isinstance(a, str) for a in value):
        raise DatasetError("answer must be a list of strings")
    return value


def sample_to_record(sample: TrainingSample) -> dict:
    return {
        "id": sample.id,
        "question": sample.instruction,
        "answer": render_answer(sample.answer.actions),
        "message": [
            {"role": "system", "content": SYSTEM_PROMPT},
            {
                "role": "user",
                "content": [
                    {"type": "image", "image": sample.observation_ref},
                    {"type": "text", "text": sample.instruction},
                ],
            },
        ],
        "answer_list": list(sample.answer.actions),
        "goal": sample.goal,
        "history": list(sample.history),
        "observation": sample.observation_ref,
        "source_step": sample.source_step,
    }


def record_to_sample(rec: dict) -> TrainingSample:
    if not isinstance(rec, dict):
        raise DatasetError("record is not a JSON object")
    try:
        answer = parse_answer(rec["answer_list"] if "answer_list" in rec else rec["answer"])
        history = rec.get("history", [])
        obs = rec.get("observation")
        if obs is None:
            obs = next(p["image"] for p in rec["message"][1]["content"] if p.get("type") == "image")
        return TrainingSample(
            id=str(rec["id"]),
            instruction=str(rec["question"]),
            observation_ref=str(obs),
            answer=ReferenceAnswer(tuple(answer)),
            source_step=int(rec.get("source_step", len(history) + 1)),
            goal=str(rec.get("goal", "")),
            history=tuple(normalize_name(h) for h in history),
        )
    except (KeyError, IndexError, TypeError, StopIteration, ValueError) as exc:
        if isinstance(exc, DatasetError):
            raise
        raise DatasetError(f"malformed sample record: {exc}") from None


def write_jsonl(samples: Iterable[TrainingSample], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_record(sample), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_jsonl(path: str | Path, *, strict: bool = False) -> list[TrainingSample]:
    """Read samples; bad lines raise (strict) or are logged and skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    samples = []
    bad = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            samples.append(record_to_sample(json.loads(line)))
        except (json.JSONDecodeError, DatasetError) as exc:
            if strict:
                raise DatasetError(f"{path}: line {lineno}: {exc}") from None
            log.warning("%s: line %d skipped: %s", path, lineno, exc)
            bad += 1
    if not samples:
        raise DatasetError(f"{path}: no valid samples")
    return samples


# --- toy-simulator trajectories --------------------------------------------------


def oracle_trajectory(task, scene) -> Trajectory:
    """Reference trajectory for a generated toy task (observations are ``toy://`` refs)."""
    from . import sim
    from .policy import observation_ref

    plan = sim.oracle_actions(task, scene)
    steps = tuple((observation_ref(task, n), a) for n, a in enumerate(plan))
    return Trajectory(task.task_id, task.goal_text, steps)


def toy_trajectories(seeds: Iterable[int], difficulty: str = "base") -> list[Trajectory]:
    from . import sim

    out = []
    for seed in seeds:
        task, scene, _ = sim.generate_task(int(seed), difficulty)
        out.append(oracle_trajectory(task, scene))
    return out


def toy_samples(seeds: Iterable[int], difficulty: str = "base", template: PromptTemplate | None = None):
    from .sim import TOY_CATALOG

    template = template or default_template()
    out = []
    for traj in toy_trajectories(seeds, difficulty):
        out.extend(decompose(traj, template, TOY_CATALOG))
    return out
