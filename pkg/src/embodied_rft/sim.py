"""Deterministic toy household simulator.

A fixed universe of receptacles and object types; each scene places the
objects, sets receptacle open/closed flags and the agent's start location.
Observations are symbolic. All randomness comes from ``numpy`` generators
seeded by the caller, so ``generate_task(seed, difficulty)`` is a pure
function of its arguments.

Action preconditions:

* ``goto R``      always valid.
* ``pickup O``    agent at O's receptacle, hand empty, receptacle open, O pickable.
* ``put R``       holding something, agent at R, R open.
* ``open R``      R openable and closed, agent at R.  ``close R`` mirrors it.
* ``toggle O``    O toggleable, agent at O's receptacle.
* ``slice O``     O sliceable and not sliced, O reachable at the agent's
                  location, agent holding the knife.
* ``clean``       holding a cleanable object at the sink basin.
* ``heat``        holding a heatable object at the microwave (clears cold).
* ``cool``        holding a coolable object at the fridge (clears hot).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

import numpy as np

from .catalog import Action, ActionCatalog

# --- world definition -------------------------------------------------------

RECEPTACLES: tuple[str, ...] = (
    "countertop",
    "diningtable",
    "sidetable",
    "shelf",
    "garbagecan",
    "sinkbasin",
    "cabinet",
    "drawer",
    "fridge",
    "microwave",
)
OPENABLE = frozenset({"cabinet", "drawer", "fridge", "microwave"})
APPLIANCE = {"clean": "sinkbasin", "heat": "microwave", "cool": "fridge"}

# name -> capabilities
OBJECTS: dict[str, frozenset[str]] = {
    "apple": frozenset({"pickup", "slice", "clean", "heat", "cool"}),
    "bread": frozenset({"pickup", "slice", "heat"}),
    "potato": frozenset({"pickup", "slice", "clean", "heat", "cool"}),
    "tomato": frozenset({"pickup", "slice", "clean", "cool"}),
    "lettuce": frozenset({"pickup", "slice", "clean", "cool"}),
    "egg": frozenset({"pickup", "heat", "cool"}),
    "mug": frozenset({"pickup", "clean", "heat", "cool"}),
    "cup": frozenset({"pickup", "clean", "cool"}),
    "plate": frozenset({"pickup", "clean"}),
    "bowl": frozenset({"pickup", "clean", "cool"}),
    "knife": frozenset({"pickup", "clean"}),
    "desklamp": frozenset({"toggle"}),
}
OBJECT_NAMES: tuple[str, ...] = tuple(OBJECTS)
TOOL = "knife"
LAMP = "desklamp"
LAMP_RECEPTACLES = ("sidetable", "shelf")

REC_INDEX = {r: i for i, r in enumerate(RECEPTACLES)}
OBJ_INDEX = {o: i for i, o in enumerate(OBJECT_NAMES)}
HELD = -1

# object state flags
CLEAN, HOT, COLD, SLICED, ON = 1, 2, 4, 8, 16
FLAG_BITS = {"clean": CLEAN, "hot": HOT, "cold": COLD, "sliced": SLICED, "on": ON}
FLAG_SKILL = {"clean": "clean", "hot": "heat", "cold": "cool", "sliced": "slice", "on": "toggle"}

OK_FEEDBACK = "Last action executed successfully."

DEFAULT_MAX_PLAN_LEN = 40


def _build_catalog() -> ActionCatalog:
    names: list[str] = []
    names += [f"goto {r}" for r in RECEPTACLES]
    names += [f"pickup {o}" for o, caps in OBJECTS.items() if "pickup" in caps]
    names += [f"put {r}" for r in RECEPTACLES]
    names += [f"open {r}" for r in RECEPTACLES if r in OPENABLE]
    names += [f"close {r}" for r in RECEPTACLES if r in OPENABLE]
    for skill in ("toggle", "slice"):
        names += [f"{skill} {o}" for o, caps in OBJECTS.items() if skill in caps]
    names += list(APPLIANCE)  # clean / heat / cool act on the held object
    return ActionCatalog.from_pairs(enumerate(names))


TOY_CATALOG = _build_catalog()


def toy_catalog() -> ActionCatalog:
    return TOY_CATALOG


# --- state ------------------------------------------------------------------


@dataclass(frozen=True)
class SceneState:
    """Symbolic scene.

    ``obj_loc[i]`` is a receptacle index or ``HELD``; ``obj_flags[i]`` a
    bitmask of CLEAN/HOT/COLD/SLICED/ON; ``rec_open[j]`` is meaningful only for
    openable receptacles (non-openable ones are always True).
    """

    obj_loc: tuple[int, ...]
    obj_flags: tuple[int, ...]
    rec_open: tuple[bool, ...]
    agent_loc: int
    holding: int = HELD

    def loc_of(self, obj: str) -> int:
        return self.obj_loc[OBJ_INDEX[obj]]

    def has_flag(self, obj: str, flag: str) -> bool:
        return bool(self.obj_flags[OBJ_INDEX[obj]] & FLAG_BITS[flag])

    def is_open(self, rec: str) -> bool:
        return self.rec_open[REC_INDEX[rec]]

    @property
    def agent_at(self) -> str:
        return RECEPTACLES[self.agent_loc]

    @property
    def held_object(self) -> str | None:
        return None if self.holding == HELD else OBJECT_NAMES[self.holding]

    def to_dict(self) -> dict:
        objects = {}
        for i, name in enumerate(OBJECT_NAMES):
            loc = self.obj_loc[i]
            objects[name] = {
                "type": name,
                "location": "agent" if loc == HELD else RECEPTACLES[loc],
                "flags": sorted(f for f, bit in FLAG_BITS.items() if self.obj_flags[i] & bit),
            }
        return {
            "objects": objects,
            "receptacles": {
                r: {"openable": r in OPENABLE, "open": self.rec_open[j]} for j, r in enumerate(RECEPTACLES)
            },
            "agent": {"location": self.agent_at, "holding": self.held_object},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneState":
        objs = d["objects"]
        loc = []
        flags = []
        for name in OBJECT_NAMES:
            o = objs[name]
            loc.append(HELD if o["location"] == "agent" else REC_INDEX[o["location"]])
            bits = 0
            for f in o["flags"]:
                bits |= FLAG_BITS[f]
            flags.append(bits)
        recs = d["receptacles"]
        held = d["agent"]["holding"]
        return cls(
            obj_loc=tuple(loc),
            obj_flags=tuple(flags),
            rec_open=tuple(bool(recs[r]["open"]) for r in RECEPTACLES),
            agent_loc=REC_INDEX[d["agent"]["location"]],
            holding=HELD if held is None else OBJ_INDEX[held],
        )

    def check_invariants(self) -> None:
        held = [i for i, loc in enumerate(self.obj_loc) if loc == HELD]
        if len(held) > 1:
            raise AssertionError("agent holds more than one object")
        if held != ([] if self.holding == HELD else [self.holding]):
            raise AssertionError("holding pointer disagrees with object locations")
        for j, r in enumerate(RECEPTACLES):
            if r not in OPENABLE and not self.rec_open[j]:
                raise AssertionError(f"non-openable receptacle {r} marked closed")


@dataclass(frozen=True)
class Feedback:
    ok: bool
    message: str = OK_FEEDBACK

    @classmethod
    def invalid(cls, reason: str) -> "Feedback":
        return cls(False, f"Last action is invalid: {reason}.")


class SimError(KeyError):
    """Raised for actions outside the scene catalog."""


def _accessible(state: SceneState, rec: int) -> bool:
    return state.rec_open[rec]


def step(state: SceneState, action: Action | int) -> tuple[SceneState, Feedback]:
    """Apply one action. Invalid actions return the unchanged state."""
    if isinstance(action, int):
        act = TOY_CATALOG.get_id(action)
        if act is None:
            raise SimError(f"unknown action id {action}")
    else:
        act = TOY_CATALOG.get_id(action.id)
        if act is None or act.name != action.name:
            raise SimError(f"action {action.name!r} (id {action.id}) is not in the scene catalog")
    skill, target = act.skill, act.object
    if skill == "goto":
        return replace(state, agent_loc=REC_INDEX[target]), Feedback(True)

    if skill in ("open", "close"):
        r = REC_INDEX[target]
        if state.agent_loc != r:
            return state, Feedback.invalid(f"the robot is not close to the {target}")
        want_open = skill == "open"
        if state.rec_open[r] == want_open:
            return state, Feedback.invalid(f"the {target} is already {'open' if want_open else 'closed'}")
        rec_open = list(state.rec_open)
        rec_open[r] = want_open
        return replace(state, rec_open=tuple(rec_open)), Feedback(True)

    if skill == "put":
        r = REC_INDEX[target]
        if state.holding == HELD:
            return state, Feedback.invalid("the robot is not holding any object")
        if state.agent_loc != r:
            return state, Feedback.invalid(f"the robot is not close to the {target}")
        if not _accessible(state, r):
            return state, Feedback.invalid(f"the {target} is closed")
        loc = list(state.obj_loc)
        loc[state.holding] = r
        return replace(state, obj_loc=tuple(loc), holding=HELD), Feedback(True)

    if skill in APPLIANCE:
        return _use_appliance(state, skill)

    o = OBJ_INDEX[target]
    caps = OBJECTS[target]
    where = state.obj_loc[o]

    if skill == "pickup":
        if state.holding != HELD:
            return state, Feedback.invalid("the robot is already holding an object")
        if where != state.agent_loc:
            return state, Feedback.invalid(f"the robot is not close to the {target}")
        if not _accessible(state, where):
            return state, Feedback.invalid(f"the {target} is inside a closed receptacle")
        loc = list(state.obj_loc)
        loc[o] = HELD
        return replace(state, obj_loc=tuple(loc), holding=o), Feedback(True)

    if skill not in caps:
        return state, Feedback.invalid(f"the {target} does not support {skill}")

    flags = list(state.obj_flags)
    if skill == "toggle":
        if where != state.agent_loc:
            return state, Feedback.invalid(f"the robot is not close to the {target}")
        flags[o] ^= ON
        return replace(state, obj_flags=tuple(flags)), Feedback(True)

    if skill == "slice":
        if state.holding != OBJ_INDEX[TOOL]:
            return state, Feedback.invalid("the robot is not holding a knife")
        if where != state.agent_loc or not _accessible(state, where):
            return state, Feedback.invalid(f"the {target} is not within reach")
        if flags[o] & SLICED:
            return state, Feedback.invalid(f"the {target} is already sliced")
        flags[o] |= SLICED
        return replace(state, obj_flags=tuple(flags)), Feedback(True)

    raise SimError(f"unhandled skill {skill!r}")


def _use_appliance(state: SceneState, skill: str) -> tuple[SceneState, Feedback]:
    """clean / heat / cool: applies to the held object at the matching appliance."""
    if state.holding == HELD:
        return state, Feedback.invalid("the robot is not holding any object")
    target = OBJECT_NAMES[state.holding]
    if skill not in OBJECTS[target]:
        return state, Feedback.invalid(f"the {target} does not support {skill}")
    appliance = APPLIANCE[skill]
    if state.agent_loc != REC_INDEX[appliance]:
        return state, Feedback.invalid(f"the robot is not close to the {appliance}")
    flags = list(state.obj_flags)
    o = state.holding
    if skill == "clean":
        flags[o] |= CLEAN
    elif skill == "heat":
        flags[o] = (flags[o] | HOT) & ~COLD
    else:
        flags[o] = (flags[o] | COLD) & ~HOT
    return replace(state, obj_flags=tuple(flags)), Feedback(True)


def run_actions(state: SceneState, names: Iterable[str]) -> tuple[SceneState, list[Feedback]]:
    log = []
    for name in names:
        state, fb = step(state, TOY_CATALOG.by_name(name))
        log.append(fb)
    return state, log


def observe(state: SceneState) -> str:
    """Symbolic observation: the agent's receptacle, what is visible there, and the hand."""
    here = state.agent_loc
    rec = RECEPTACLES[here]
    status = ""
    if rec in OPENABLE:
        status = " (open)" if state.rec_open[here] else " (closed)"
    if state.rec_open[here]:
        visible = [OBJECT_NAMES[i] for i, loc in enumerate(state.obj_loc) if loc == here]
    else:
        visible = []
    held = state.held_object or "nothing"
    seen = ", ".join(visible) if visible else "nothing"
    return f"The robot is at the {rec}{status}. Visible: {seen}. Holding: {held}."


# --- goal predicates ---------------------------------------------------------


@dataclass(frozen=True)
class InReceptacle:
    obj: str
    rec: str
    kind: str = field(default="in", init=False)

    def holds(self, s: SceneState) -> bool:
        return s.obj_loc[OBJ_INDEX[self.obj]] == REC_INDEX[self.rec]

    def to_dict(self) -> dict:
        return {"kind": "in", "object": self.obj, "receptacle": self.rec}


@dataclass(frozen=True)
class HasState:
    obj: str
    flag: str
    kind: str = field(default="state", init=False)

    def holds(self, s: SceneState) -> bool:
        return bool(s.obj_flags[OBJ_INDEX[self.obj]] & FLAG_BITS[self.flag])

    def to_dict(self) -> dict:
        return {"kind": "state", "object": self.obj, "flag": self.flag}


@dataclass(frozen=True)
class Near:
    """``obj`` rests in the same receptacle as ``other`` (neither held)."""

    obj: str
    other: str
    kind: str = field(default="near", init=False)

    def holds(self, s: SceneState) -> bool:
        a = s.obj_loc[OBJ_INDEX[self.obj]]
        return a != HELD and a == s.obj_loc[OBJ_INDEX[self.other]]

    def to_dict(self) -> dict:
        return {"kind": "near", "object": self.obj, "other": self.other}


Condition = Union[InReceptacle, HasState, Near]


def condition_from_dict(d: dict) -> Condition:
    kind = d["kind"]
    if kind == "in":
        return InReceptacle(d["object"], d["receptacle"])
    if kind == "state":
        return HasState(d["object"], d["flag"])
    if kind == "near":
        return Near(d["object"], d["other"])
    raise ValueError(f"unknown condition kind {kind!r}")


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    goal_text: str
    conditions: tuple[Condition, ...]
    seed: int
    category: str = "base"

    def __post_init__(self) -> None:
        if not self.conditions:
            raise ValueError("a task needs at least one goal condition")
        if self.category not in ("base", "long_horizon"):
            raise ValueError(f"unknown task category {self.category!r}")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "goal_text": self.goal_text,
            "conditions": [c.to_dict() for c in self.conditions],
            "seed": self.seed,
            "category": self.category,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        return cls(
            task_id=d["task_id"],
            goal_text=d["goal_text"],
            conditions=tuple(condition_from_dict(c) for c in d["conditions"]),
            seed=int(d["seed"]),
            category=d.get("category", "base"),
        )


def check_goal(state: SceneState, task: TaskSpec) -> tuple[int, int]:
    return sum(c.holds(state) for c in task.conditions), len(task.conditions)


def is_success(state: SceneState, task: TaskSpec) -> bool:
    return all(c.holds(state) for c in task.conditions)


# --- goal grouping (shared by the oracle and the policy features) -------------


@dataclass(frozen=True)
class GoalGroup:
    """All conditions whose primary object is ``obj``, in task order."""

    obj: str
    flags: tuple[str, ...]  # required state flags
    dest_rec: str | None  # In(obj, rec)
    near: str | None  # Near(obj, other)
    conditions: tuple[Condition, ...]

    def satisfied(self, s: SceneState) -> bool:
        return all(c.holds(s) for c in self.conditions)


# processing order of state flags within one object's group
FLAG_ORDER = ("sliced", "on", "clean", "hot", "cold")


@functools.lru_cache(maxsize=4096)
def goal_groups(conditions: tuple[Condition, ...]) -> tuple[GoalGroup, ...]:
    order: list[str] = []
    by_obj: dict[str, list[Condition]] = {}
    for c in conditions:
        if c.obj not in by_obj:
            order.append(c.obj)
            by_obj[c.obj] = []
        by_obj[c.obj].append(c)
    groups = []
    for obj in order:
        conds = by_obj[obj]
        flags = tuple(f for f in FLAG_ORDER if any(isinstance(c, HasState) and c.flag == f for c in conds))
        dest = next((c.rec for c in conds if isinstance(c, InReceptacle)), None)
        near = next((c.other for c in conds if isinstance(c, Near)), None)
        groups.append(GoalGroup(obj, flags, dest, near, tuple(conds)))
    return tuple(groups)




def current_group(task: TaskSpec, s: SceneState) -> GoalGroup | None:
    for g in goal_groups(task.conditions):
        if not g.satisfied(s):
            return g
    return None


def pending_flags(group: GoalGroup, s: SceneState) -> tuple[str, ...]:
    return tuple(f for f in group.flags if not s.has_flag(group.obj, f))


def destination(group: GoalGroup, s: SceneState) -> str | None:
    if group.dest_rec is not None:
        return group.dest_rec
    if group.near is not None:
        loc = s.loc_of(group.near)
        return None if loc == HELD else RECEPTACLES[loc]
    return None


def needs_pickup(group: GoalGroup, s: SceneState) -> bool:
    """Whether finishing this group requires carrying the object."""
    pend = pending_flags(group, s)
    if any(f in ("clean", "hot", "cold") for f in pend):
        return True
    dest = destination(group, s)
    if dest is None:
        return False
    return s.loc_of(group.obj) != REC_INDEX[dest]


# --- oracle planner -----------------------------------------------------------


class OracleError(RuntimeError):
    pass


def oracle_actions(task: TaskSpec, state: SceneState, max_len: int = 200) -> list[str]:
    """Action names that drive ``state`` to satisfy every condition of ``task``.

    Groups are handled in task order; within a group the order is slice,
    toggle, pick up, clean, heat, cool, place.
    """
    s = state
    plan: list[str] = []

    def do(name: str) -> None:
        nonlocal s
        s, fb = step(s, TOY_CATALOG.by_name(name))
        if not fb.ok:
            raise OracleError(f"oracle produced invalid action {name!r}: {fb.message}")
        plan.append(name)
        if len(plan) > max_len:
            raise OracleError("oracle plan exceeded the length cap")

    def go(rec: str) -> None:
        if s.agent_at != rec:
            do(f"goto {rec}")

    def ensure_open(rec: str) -> None:
        if rec in OPENABLE and not s.is_open(rec):
            do(f"open {rec}")

    def free_hand() -> None:
        if s.holding != HELD:
            ensure_open(s.agent_at)
            do(f"put {s.agent_at}")

    for group in goal_groups(task.conditions):
        if group.satisfied(s):
            continue
        obj = group.obj
        pend = pending_flags(group, s)
        if "sliced" in pend:
            if s.held_object != TOOL:
                free_hand()
                go(RECEPTACLES[s.loc_of(TOOL)])
                ensure_open(s.agent_at)
                do(f"pickup {TOOL}")
            go(RECEPTACLES[s.loc_of(obj)])
            ensure_open(s.agent_at)
            do(f"slice {obj}")
        if "on" in pend:
            go(RECEPTACLES[s.loc_of(obj)])
            do(f"toggle {obj}")
        if needs_pickup(group, s):
            if s.holding != OBJ_INDEX[obj]:
                free_hand()
                go(RECEPTACLES[s.loc_of(obj)])
                ensure_open(s.agent_at)
                do(f"pickup {obj}")
            for flag in ("clean", "hot", "cold"):
                if flag in pend:
                    skill = FLAG_SKILL[flag]
                    go(APPLIANCE[skill])
                    do(skill)
            dest = destination(group, s)
            if dest is None:
                free_hand()
            else:
                go(dest)
                ensure_open(dest)
                do(f"put {dest}")
        if not group.satisfied(s):
            raise OracleError(f"oracle failed to satisfy group for {obj!r}")
    return plan


# --- task generation ----------------------------------------------------------

_TEMPLATES = ("pick_place", "clean_place", "heat_place", "cool_place", "slice", "look_at")


def _goal_phrase(kind: str, obj: str, rec: str | None) -> str:
    prep = "in" if rec in OPENABLE or rec in ("sinkbasin", "garbagecan") else "on"
    return {
        "pick_place": f"put the {obj} {prep} the {rec}",
        "clean_place": f"put a clean {obj} {prep} the {rec}",
        "heat_place": f"put a hot {obj} {prep} the {rec}",
        "cool_place": f"put a cold {obj} {prep} the {rec}",
        "slice": f"slice the {obj}",
        "look_at": f"examine the {obj} under the {LAMP}",
    }[kind]


def _random_scene(rng: np.random.Generator) -> SceneState:
    loc = []
    for name in OBJECT_NAMES:
        if name == LAMP:
            loc.append(REC_INDEX[LAMP_RECEPTACLES[int(rng.integers(len(LAMP_RECEPTACLES)))]])
        else:
            loc.append(int(rng.integers(len(RECEPTACLES))))
    flags = []
    for name in OBJECT_NAMES:
        bits = 0
        if "clean" in OBJECTS[name] and rng.random() < 0.15:
            bits |= CLEAN
        flags.append(bits)
    rec_open = tuple(bool(r not in OPENABLE or rng.random() < 0.3) for r in RECEPTACLES)
    return SceneState(tuple(loc), tuple(flags), rec_open, int(rng.integers(len(RECEPTACLES))))


def _choice(rng: np.random.Generator, items: Sequence[str]) -> str:
    return items[int(rng.integers(len(items)))]


def _sample_subgoal(
    rng: np.random.Generator, scene: SceneState, used: set[str]
) -> tuple[str, tuple[Condition, ...], str] | None:
    kind = _choice(rng, _TEMPLATES)
    if kind == "slice":
        if TOOL in used:
            return None
        cands = [o for o, c in OBJECTS.items() if "slice" in c and o not in used]
        obj = _choice(rng, cands)
        return kind, (HasState(obj, "sliced"),), _goal_phrase(kind, obj, None)
    if kind == "look_at":
        if LAMP in used:
            return None
        cands = [o for o, c in OBJECTS.items() if "pickup" in c and o not in used and o != TOOL]
        obj = _choice(rng, cands)
        return kind, (Near(obj, LAMP), HasState(LAMP, "on")), _goal_phrase(kind, obj, None)
    need = {"pick_place": "pickup", "clean_place": "clean", "heat_place": "heat", "cool_place": "cool"}[kind]
    cands = [o for o, c in OBJECTS.items() if need in c and o not in used]
    if not cands:
        return None
    obj = _choice(rng, cands)
    excluded = {"heat_place": "microwave", "cool_place": "fridge", "clean_place": "sinkbasin"}.get(kind)
    recs = [r for r in RECEPTACLES if r != excluded and r != RECEPTACLES[scene.loc_of(obj)]]
    rec = _choice(rng, recs)
    conds: tuple[Condition, ...] = (InReceptacle(obj, rec),)
    flag = {"clean_place": "clean", "heat_place": "hot", "cool_place": "cold"}.get(kind)
    if flag:
        conds = (HasState(obj, flag),) + conds
    return kind, conds, _goal_phrase(kind, obj, rec)


LENGTH_RANGES = {"base": (2, 8), "long_horizon": (15, 30)}


def generate_task(
    seed: int, difficulty: str = "base", max_plan_len: int = DEFAULT_MAX_PLAN_LEN
) -> tuple[TaskSpec, SceneState, ActionCatalog]:
    """Deterministic task for ``(seed, difficulty)``; solvable within the length range."""
    if difficulty not in LENGTH_RANGES:
        raise ValueError(f"unknown difficulty {difficulty!r}")
    lo, hi = LENGTH_RANGES[difficulty]
    hi = min(hi, max_plan_len)
    tag = 0 if difficulty == "base" else 1
    rng = np.random.default_rng([int(seed), tag])
    for _ in range(1000):
        scene = _random_scene(rng)
        n_sub = 1 if difficulty == "base" else int(rng.integers(3, 5))
        used: set[str] = set()
        conds: list[Condition] = []
        phrases: list[str] = []
        for _ in range(n_sub * 4):
            if len(phrases) == n_sub:
                break
            sub = _sample_subgoal(rng, scene, used)
            if sub is None:
                continue
            kind, sub_conds, phrase = sub
            objs = {c.obj for c in sub_conds}
            if kind == "slice":
                objs.add(TOOL)
            if kind == "look_at":
                objs.add(LAMP)
            if objs & used:
                continue
            used |= objs
            conds.extend(sub_conds)
            phrases.append(phrase)
        if len(phrases) < n_sub:
            continue
        task = TaskSpec(
            task_id=f"{difficulty}_{seed:06d}",
            goal_text=", then ".join(phrases) if n_sub > 1 else phrases[0],
            conditions=tuple(conds),
            seed=int(seed),
            category=difficulty,
        )
        if is_success(scene, task):
            continue
        try:
            plan = oracle_actions(task, scene)
        except OracleError:
            continue
        if lo <= len(plan) <= hi:
            return task, scene, TOY_CATALOG
    raise RuntimeError(f"could not generate a {difficulty} task for seed {seed}")


def scene_for(task: TaskSpec) -> SceneState:
    """Regenerate the initial scene of a generated task."""
    _, scene, _ = generate_task(task.seed, task.category)
    return scene
