"""Parse raw model output into a structured plan response.

Model outputs often wrap the JSON object in prose or markdown fences. The
parser strips fences, then tries each balanced ``{...}`` region in order
(string literals are respected while counting braces) and keeps the first
one that decodes to a JSON object.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .catalog import normalize_name

TOP_LEVEL_FIELDS = (
    "reasoning_and_reflection",
    "visual_state_description",
    "language_plan",
    "executable_plan",
)
TEXT_FIELDS = TOP_LEVEL_FIELDS[:3]

_FENCE_RE = re.compile(r"```[A-Za-z0-9_-]*")


@dataclass(frozen=True)
class PlanStep:
    action_id: int | None = None
    action_name: str | None = None

    @property
    def well_formed(self) -> bool:
        return self.action_id is not None and self.action_name is not None


@dataclass(frozen=True)
class PlanResponse:
    reasoning_and_reflection: str | None = None
    visual_state_description: str | None = None
    language_plan: str | None = None
    executable_plan: tuple[PlanStep, ...] = field(default_factory=tuple)
    has_all_top_level_fields: bool = False
    parse_ok: bool = False

    @property
    def n_steps(self) -> int:
        return len(self.executable_plan)

    @property
    def n_well_formed(self) -> int:
        return sum(step.well_formed for step in self.executable_plan)

    def to_dict(self) -> dict[str, Any]:
        """Serialize back to the response schema.

        Keys whose value was absent or unusable are omitted unless all four
        top-level fields were present, in which case all keys are emitted.
        """
        out: dict[str, Any] = {}
        for key in TEXT_FIELDS:
            value = getattr(self, key)
            if value is not None or self.has_all_top_level_fields:
                out[key] = value
        if self.executable_plan or self.has_all_top_level_fields:
            plan = []
            for step in self.executable_plan:
                entry: dict[str, Any] = {}
                if step.action_id is not None:
                    entry["action_id"] = step.action_id
                if step.action_name is not None:
                    entry["action_name"] = step.action_name
                plan.append(entry)
            out["executable_plan"] = plan
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def _strip_fences(text: str) -> str:
    return _FENCE_RE.sub(" ", text)


def _balanced_regions(text: str):
    """Yield every top-level balanced ``{...}`` substring, left to right."""
    i, n = 0, len(text)
    while i < n:
        start = text.find("{", i)
        if start < 0:
            return
        depth = 0
        in_str = False
        escaped = False
        end = -1
        for j in range(start, n):
            ch = text[j]
            if in_str:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_str = False
                continue
            if ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    end = j
                    break
        if end < 0:
            # unbalanced from here; a later '{' may still open a complete object
            i = start + 1
            continue
        yield text[start : end + 1]
        i = end + 1


def extract_json_object(text: str) -> dict | None:
    cleaned = _strip_fences(text)
    for region in _balanced_regions(cleaned):
        try:
            obj = json.loads(region)
        except (json.JSONDecodeError, RecursionError):
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _parse_step(entry: Any) -> PlanStep:
    if not isinstance(entry, dict):
        return PlanStep()
    raw_id = entry.get("action_id")
    raw_name = entry.get("action_name")
    # bool is an int subclass in Python; floats like 3.0 are not integers here
    action_id = raw_id if isinstance(raw_id, int) and not isinstance(raw_id, bool) else None
    action_name = raw_name if isinstance(raw_name, str) else None
    return PlanStep(action_id, action_name)


def parse_response(raw: str, *, require_nonempty: bool = False) -> PlanResponse:
    """Best-effort structured parse. Never raises for string input.

    ``require_nonempty`` makes the top-level field check also demand
    non-empty text fields and a non-empty plan.
    """
    obj = extract_json_object(raw) if isinstance(raw, str) else None
    if obj is None:
        return PlanResponse()
    plan_raw = obj.get("executable_plan")
    steps = tuple(_parse_step(e) for e in plan_raw) if isinstance(plan_raw, list) else ()
    has_all = all(k in obj for k in TOP_LEVEL_FIELDS)
    if has_all and require_nonempty:
        has_all = all(isinstance(obj[k], str) and obj[k].strip() for k in TEXT_FIELDS) and bool(steps)
    texts = {k: obj[k] if isinstance(obj.get(k), str) else None for k in TEXT_FIELDS}
    return PlanResponse(
        executable_plan=steps,
        has_all_top_level_fields=has_all,
        parse_ok=True,
        **texts,
    )


def extract_action_sequence(resp: PlanResponse) -> list[tuple[int, str]]:
    """(action_id, normalized name) for each well-formed step, in plan order."""
    return [
        (step.action_id, normalize_name(step.action_name))
        for step in resp.executable_plan
        if step.well_formed
    ]


def plan_names(resp: PlanResponse) -> list[str | None]:
    """Normalized name per step; ``None`` marks an ill-formed step."""
    return [normalize_name(s.action_name) if s.well_formed else None for s in resp.executable_plan]


def render_response(
    steps: list[tuple[int, str]],
    *,
    reasoning: str = "",
    visual: str = "",
    language_plan: str | None = None,
) -> str:
    """Render a plan in the four-field schema (used by the toy policy and fixtures)."""
    if language_plan is None:
        language_plan = ", then ".join(name for _, name in steps)
    return json.dumps(
        {
            "reasoning_and_reflection": reasoning,
            "visual_state_description": visual,
            "language_plan": language_plan,
            "executable_plan": [{"action_id": i, "action_name": n} for i, n in steps],
        },
        ensure_ascii=False,
    )
