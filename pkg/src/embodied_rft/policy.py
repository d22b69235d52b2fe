"""Linear-softmax plan policy over the toy simulator's grounded actions.

The policy scores ``n_actions = catalog size + 1`` choices (the extra one is
STOP) with ``softmax(phi @ W / temperature)`` where ``phi`` is a fixed-size
0/1 feature vector of (task, imagined state, history). While emitting a plan
the policy advances an imagined copy of the scene through the simulator's
transition function, so later steps are conditioned on the effect of earlier
ones.

Checkpoint layout (little endian)::

    magic   4s   b"ERFT"
    version u2   CHECKPOINT_VERSION
    rows    u4   number of features
    cols    u4   number of actions (catalog + STOP)
    temp    f8   temperature
    data    f8 * rows * cols, row-major
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sim
from .response import render_response
from .sim import (
    HELD,
    OBJ_INDEX,
    OBJECT_NAMES,
    RECEPTACLES,
    REC_INDEX,
    TOY_CATALOG,
    SceneState,
    TaskSpec,
)

N_REC = len(RECEPTACLES)
N_OBJ = len(OBJECT_NAMES)
STOP = TOY_CATALOG.size  # index of the stop decision
N_ACTIONS = TOY_CATALOG.size + 1
MAX_PLAN_ACTIONS = 20

_SKILLS = ("none", "goto", "pickup", "put", "open", "close", "toggle", "slice", "clean", "heat", "cool")
_OPS = ("none", "sliced", "on", "clean", "hot", "cold", "place")
_HAND = ("empty", "target", "tool", "other")


def _layout() -> dict[str, tuple[int, int]]:
    blocks = [
        ("bias", 1),
        ("done", 1),
        ("hand_op", 4 * len(_OPS)),
        ("hand_at_nloc", 4 * 4),
        ("hand_at_dest", 4 * 8),
        ("hand_at_app", 4 * 2),
        ("hand_here_open", 4 * 2),
        ("nloc", N_REC),
        ("dest", 4 * N_REC),
        ("agent", 4 * N_REC),
        ("target", 4 * N_OBJ),
        ("last_skill", len(_SKILLS)),
        ("step", 5),
    ]
    out = {}
    offset = 0
    for name, size in blocks:
        out[name] = (offset, size)
        offset += size
    return out


FEATURE_LAYOUT = _layout()
N_FEATURES = sum(size for _, size in FEATURE_LAYOUT.values())


@dataclass(frozen=True)
class PlanContext:
    task: TaskSpec
    state: SceneState
    history: tuple[str, ...] = ()


def active_features(task: TaskSpec, s: SceneState, history: Sequence[str]) -> list[int]:
    """Indices of the 1-valued features. Deterministic in its arguments."""
    L = FEATURE_LAYOUT
    idx = [L["bias"][0]]
    g = sim.current_group(task, s)
    if g is None:
        idx.append(L["done"][0])
        op = "none"
        hand = 0 if s.holding == HELD else 3
        nloc = dest = app = None
    else:
        pend = sim.pending_flags(g, s)
        op = pend[0] if pend else "place"
        knife = OBJ_INDEX[sim.TOOL]
        if s.holding == HELD:
            hand = 0
        elif s.holding == OBJ_INDEX[g.obj]:
            hand = 1
        elif op == "sliced" and s.holding == knife:
            hand = 2
        else:
            hand = 3
        # the object the next interaction is about: the knife while it still has to be fetched
        need = knife if op == "sliced" and hand == 0 else OBJ_INDEX[g.obj]
        loc = s.obj_loc[need]
        nloc = loc if hand in (0, 2) and loc != HELD else None
        d = sim.destination(g, s)
        dest = None if d is None else REC_INDEX[d]
        appliance = {"clean": "sinkbasin", "hot": "microwave", "cold": "fridge"}.get(op)
        app = None if appliance is None else REC_INDEX[appliance]
        idx.append(L["target"][0] + hand * N_OBJ + need)

    here = s.agent_loc
    idx.append(L["hand_op"][0] + hand * len(_OPS) + _OPS.index(op))
    if nloc is not None:
        at = int(here == nloc)
        idx.append(L["hand_at_nloc"][0] + hand * 4 + 2 * at + int(s.rec_open[nloc]))
        idx.append(L["nloc"][0] + nloc)
    if dest is not None:
        at = int(here == dest)
        idx.append(L["hand_at_dest"][0] + hand * 8 + 4 + 2 * at + int(s.rec_open[dest]))
        idx.append(L["dest"][0] + hand * N_REC + dest)
    else:
        idx.append(L["hand_at_dest"][0] + hand * 8)
    if app is not None:
        idx.append(L["hand_at_app"][0] + hand * 2 + int(here == app))
    idx.append(L["hand_here_open"][0] + hand * 2 + int(s.rec_open[here]))
    idx.append(L["agent"][0] + hand * N_REC + here)
    last = TOY_CATALOG.by_name(history[-1]).skill if history else "none"
    idx.append(L["last_skill"][0] + _SKILLS.index(last))
    idx.append(L["step"][0] + min(len(history), 4))
    return idx


def context_features(task: TaskSpec, s: SceneState, history: Sequence[str]) -> np.ndarray:
    phi = np.zeros(N_FEATURES)
    phi[active_features(task, s, history)] = 1.0
    return phi


# --- parameters -------------------------------------------------------------

CHECKPOINT_MAGIC = b"ERFT"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sHIId")


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


class LinearSoftmaxPolicy:
    """``pi(a | phi) = softmax(phi @ W / temperature)``."""

    version = CHECKPOINT_VERSION

    def __init__(self, weights: np.ndarray, temperature: float = 1.0):
        weights = np.array(weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weights must be a 2-d (features x actions) array")
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        self.weights = weights
        self.temperature = float(temperature)

    @classmethod
    def zeros(cls, n_features: int = N_FEATURES, n_actions: int = N_ACTIONS, temperature: float = 1.0):
        return cls(np.zeros((n_features, n_actions)), temperature)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    @property
    def n_actions(self) -> int:
        return self.weights.shape[1]

    @property
    def params(self) -> np.ndarray:
        return self.weights.reshape(-1)

    @params.setter
    def params(self, flat: np.ndarray) -> None:
        self.weights = np.array(flat, dtype=np.float64).reshape(self.weights.shape)

    def copy(self) -> "LinearSoftmaxPolicy":
        return LinearSoftmaxPolicy(self.weights.copy(), self.temperature)

    def _log_softmax(self, feats: np.ndarray, temperature: float | None = None) -> np.ndarray:
        tau = self.temperature if temperature is None else temperature
        z = np.atleast_2d(feats) @ self.weights / tau
        z = z - z.max(axis=1, keepdims=True)
        return z - np.log(np.exp(z).sum(axis=1, keepdims=True))

    def probs(self, feats: np.ndarray, temperature: float | None = None) -> np.ndarray:
        return np.exp(self._log_softmax(feats, temperature))

    def log_probs(self, feats: np.ndarray, actions: Sequence[int], temperature: float | None = None) -> np.ndarray:
        actions = np.asarray(actions, dtype=np.int64)
        if actions.size and (actions.min() < 0 or actions.max() >= self.n_actions):
            raise ValueError("action index outside the policy's action space")
        logp = self._log_softmax(feats, temperature)
        return logp[np.arange(len(actions)), actions]

    def grad_log_probs(self, feats: np.ndarray, actions: Sequence[int], step_weights: np.ndarray) -> np.ndarray:
        """Gradient of ``sum_t step_weights[t] * log pi(a_t | phi_t)`` w.r.t. the flat params."""
        feats = np.atleast_2d(feats)
        actions = np.asarray(actions, dtype=np.int64)
        p = self.probs(feats)
        delta = -p
        delta[np.arange(len(actions)), actions] += 1.0
        delta *= np.asarray(step_weights, dtype=np.float64)[:, None] / self.temperature
        return (feats.T @ delta).reshape(-1)

    def entropy(self, feats: np.ndarray, temperature: float | None = None) -> np.ndarray:
        logp = self._log_softmax(feats, temperature)
        return -(np.exp(logp) * logp).sum(axis=1)

    # --- serialization ---

    def to_bytes(self) -> bytes:
        rows, cols = self.weights.shape
        head = _HEADER.pack(CHECKPOINT_MAGIC, self.version, rows, cols, self.temperature)
        return head + np.ascontiguousarray(self.weights, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LinearSoftmaxPolicy":
        if len(blob) < _HEADER.size:
            raise CheckpointShapeError("checkpoint shorter than its header")
        magic, version, rows, cols, temp = _HEADER.unpack_from(blob)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError("not a policy checkpoint (bad magic)")
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(f"checkpoint version {version}, expected {CHECKPOINT_VERSION}")
        body = blob[_HEADER.size :]
        if len(body) != rows * cols * 8:
            raise CheckpointShapeError(
                f"checkpoint declares {rows}x{cols} weights but holds {len(body)} bytes"
            )
        weights = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)
        return cls(weights, temp)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path, expect_shape: tuple[int, int] | None = None) -> "LinearSoftmaxPolicy":
        pol = cls.from_bytes(Path(path).read_bytes())
        if expect_shape is not None and pol.weights.shape != tuple(expect_shape):
            raise CheckpointShapeError(f"checkpoint shape {pol.weights.shape} != expected {tuple(expect_shape)}")
        return pol


# --- plan sampling -------------------------------------------------------------


@dataclass
class PlanSample:
    """One emitted plan: decisions (catalog ids plus a trailing STOP, if any)."""

    text: str
    actions: np.ndarray
    feats: np.ndarray
    logp: np.ndarray

    @property
    def plan_ids(self) -> list[int]:
        return [int(a) for a in self.actions if a != STOP]

    @property
    def plan_length(self) -> int:
        return len(self.plan_ids)


def _render(ctx: PlanContext, ids: list[int]) -> str:
    steps = [(i, TOY_CATALOG.by_id(i).name) for i in ids]
    g = sim.current_group(ctx.task, ctx.state)
    focus = "all goals already hold" if g is None else f"next I work on the {g.obj}"
    reasoning = f"The goal is to {ctx.task.goal_text}; {focus}."
    return render_response(steps, reasoning=reasoning, visual=sim.observe(ctx.state))


def sample_plan(
    policy: LinearSoftmaxPolicy,
    ctx: PlanContext,
    rng: np.random.Generator | None = None,
    max_len: int = MAX_PLAN_ACTIONS,
    temperature: float | None = None,
) -> PlanSample:
    """Autoregressively emit up to ``max_len`` actions.

    ``temperature=0`` selects greedy (argmax) decoding. Recorded log-probs are
    always under ``policy.temperature`` so they agree with ``policy.log_probs``.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    tau = policy.temperature if temperature is None else temperature
    s = ctx.state
    history = list(ctx.history)
    feats = []
    actions = []
    if tau > 0 and rng is None:
        raise ValueError("sampling at positive temperature needs an rng")
    for _ in range(max_len):
        idx = active_features(ctx.task, s, history)
        phi = np.zeros(N_FEATURES)
        phi[idx] = 1.0
        feats.append(phi)
        z = policy.weights[idx].sum(axis=0)
        if tau == 0:
            a = int(np.argmax(z))
        else:
            # inverse-CDF draw from softmax(z / tau)
            w = np.exp((z - z.max()) / tau)
            cdf = np.cumsum(w)
            a = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(z) - 1)
        actions.append(a)
        if a == STOP:
            break
        s, _ = sim.step(s, a)
        history.append(TOY_CATALOG.by_id(a).name)
    F = np.array(feats)
    acts = np.array(actions, dtype=np.int64)
    logp = policy.log_probs(F, acts)
    ids = [a for a in actions if a != STOP]
    return PlanSample(_render(ctx, ids), acts, F, logp)


def encode_demo(ctx: PlanContext, gold: Sequence[str], *, add_stop: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Features and decision indices for a gold action sequence from ``ctx``."""
    s = ctx.state
    history = list(ctx.history)
    feats = []
    actions = []
    for name in gold:
        act = TOY_CATALOG.get_name(name)
        if act is None:
            raise ValueError(f"action {name!r} is outside the policy's action space")
        feats.append(context_features(ctx.task, s, history))
        actions.append(act.id)
        s, _ = sim.step(s, act)
        history.append(act.name)
    if add_stop:
        feats.append(context_features(ctx.task, s, history))
        actions.append(STOP)
    return np.array(feats), np.array(actions, dtype=np.int64)


def context_from_ref(observation_ref: str, history: Sequence[str]) -> PlanContext:
    """Resolve a ``toy://<category>/<seed>/<step>`` reference by replaying ``history``."""
    prefix = "toy://"
    if not observation_ref.startswith(prefix):
        raise ValueError(f"not a toy observation reference: {observation_ref!r}")
    try:
        category, seed, n = observation_ref[len(prefix) :].split("/")
        seed_i, n_i = int(seed), int(n)
    except ValueError:
        raise ValueError(f"malformed toy observation reference: {observation_ref!r}") from None
    if n_i != len(history):
        raise ValueError(f"{observation_ref!r} is step {n_i} but history has {len(history)} actions")
    task, scene, _ = sim.generate_task(seed_i, category)
    state, log = sim.run_actions(scene, history)
    if not all(fb.ok for fb in log):
        raise ValueError(f"history for {observation_ref!r} contains invalid actions")
    return PlanContext(task, state, tuple(history))


def observation_ref(task: TaskSpec, n: int) -> str:
    return f"toy://{task.category}/{task.seed}/{n}"
