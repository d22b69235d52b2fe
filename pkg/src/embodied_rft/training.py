"""Two-stage training: behavior-cloning warm start, then filtered GRPO.

Run directory layout::

    resolved_config.yaml     the fully merged configuration
    metadata.json            wall-clock timestamps (the only non-deterministic file)
    ref.ckpt                 policy after the warm start (KL reference)
    curves.csv               one row per RFT step
    filter_stats.csv         accepted / rejected groups per RFT step
    checkpoints/step_NNNNNN/ policy.ckpt, state.json, buffer.npz
    final.ckpt               policy at the end of the run

All randomness is drawn from ``numpy`` generators keyed by
``(seed, substream, step)``, so a run resumed from a checkpoint replays the
remaining steps exactly.
"""

from __future__ import annotations

import csv
import json
import logging
import shutil
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import filtering
from .config import RunConfig
from .dataset import TrainingSample, toy_samples
from .evaluation import EvalSummary, PolicyPlanner, evaluate_policy
from .filtering import MemoryBuffer
from .grpo import NumericalError, Optimizer, Rollout, RolloutGroup, behavior_clone_step, encode_samples, stack_demos, train_step
from .policy import LinearSoftmaxPolicy, PlanContext, context_from_ref, sample_plan
from .reward import score_response
from .response import parse_response
from .sim import TOY_CATALOG, generate_task

log = logging.getLogger(__name__)

CURVE_COLUMNS = (
    "step",
    "mean_total_reward",
    "mean_accuracy_reward_filtered",
    "mean_accuracy_reward_original",
    "mean_response_length",
    "loss",
)
FILTER_COLUMNS = ("step", "groups", "accepted", "rejected", "acceptance_fraction")

# named random substreams
STREAM_SAMPLING = 1
STREAM_PROMPTS = 2
STREAM_EVAL = 3


def substream(seed: int, stream: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream, *map(int, extra)])


class TrainingError(RuntimeError):
    pass


# --- data -------------------------------------------------------------------------


def sft_samples(cfg: RunConfig) -> list[TrainingSample]:
    return toy_samples(range(cfg.sft_tasks), cfg.train_difficulty)


def rft_samples(cfg: RunConfig) -> list[TrainingSample]:
    return toy_samples(range(cfg.rft_tasks), cfg.train_difficulty)


def warm_start(policy: LinearSoftmaxPolicy, samples: Sequence[TrainingSample], epochs: int, lr: float) -> list[float]:
    """Full-batch behavior cloning; returns the NLL before each epoch."""
    if epochs == 0 or not samples:
        return []
    batch = stack_demos(encode_samples(samples))
    return [behavior_clone_step(batch, policy, lr) for _ in range(epochs)]


# --- rollouts -----------------------------------------------------------------------


def rollout_group(
    policy: LinearSoftmaxPolicy,
    sample: TrainingSample,
    ctx: PlanContext,
    group_size: int,
    max_len: int,
    rng: np.random.Generator,
) -> RolloutGroup:
    rollouts = []
    for _ in range(group_size):
        plan = sample_plan(policy, ctx, rng, max_len=max_len)
        br = score_response(parse_response(plan.text), sample.answer, TOY_CATALOG)
        rollouts.append(
            Rollout(
                feats=plan.feats,
                actions=plan.actions,
                old_logp=plan.logp,
                reward=br.total,
                accuracy=br.r_accuracy,
                length=plan.plan_length,
                text=plan.text,
                full=br.full_accuracy,
            )
        )
    return RolloutGroup(sample.id, rollouts)


# --- checkpoint state ----------------------------------------------------------------


def _save_buffer(buffer: MemoryBuffer, path: Path) -> None:
    arrays = {}
    meta = []
    for gi, g in enumerate(buffer.groups):
        meta.append({"prompt_id": g.prompt_id, "n": g.size})
        arrays[f"g{gi}_adv"] = g.advantages
        for ri, ro in enumerate(g.rollouts):
            arrays[f"g{gi}_r{ri}_feats"] = ro.feats
            arrays[f"g{gi}_r{ri}_actions"] = ro.actions
            arrays[f"g{gi}_r{ri}_old"] = ro.old_logp
            arrays[f"g{gi}_r{ri}_scalars"] = np.array([ro.reward, ro.accuracy, ro.length, ro.full])
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def _load_buffer(path: Path, capacity: int) -> list[RolloutGroup]:
    with np.load(path) as z:
        meta = json.loads(z["meta"].tobytes().decode())
        groups = []
        for gi, m in enumerate(meta):
            rollouts = []
            for ri in range(m["n"]):
                reward, accuracy, length, full = z[f"g{gi}_r{ri}_scalars"]
                rollouts.append(
                    Rollout(
                        z[f"g{gi}_r{ri}_feats"],
                        z[f"g{gi}_r{ri}_actions"],
                        z[f"g{gi}_r{ri}_old"],
                        float(reward),
                        float(accuracy),
                        int(length),
                        full=bool(full),
                    )
                )
            groups.append(RolloutGroup(m["prompt_id"], rollouts, z[f"g{gi}_adv"]))
    if len(groups) > capacity:
        raise TrainingError("checkpointed buffer exceeds the configured capacity")
    return groups


@dataclass
class TrainerState:
    step: int
    policy: LinearSoftmaxPolicy
    optimizer: Optimizer
    buffer: MemoryBuffer


def checkpoint_dir(run_dir: Path, step: int) -> Path:
    return run_dir / "checkpoints" / f"step_{step:06d}"


def save_state(run_dir: Path, st: TrainerState) -> Path:
    d = checkpoint_dir(run_dir, st.step)
    tmp = d.with_name(d.name + ".tmp")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    st.policy.save(tmp / "policy.ckpt")
    if st.optimizer.velocity is not None:
        np.save(tmp / "velocity.npy", st.optimizer.velocity)
    _save_buffer(st.buffer, tmp / "buffer.npz")
    b = st.buffer
    state = {
        "step": st.step,
        "total_seen": b.total_seen,
        "total_accepted": b.total_accepted,
        "flushes": b.flushes,
        "trainer_calls": b.trainer_calls,
    }
    (tmp / "state.json").write_text(json.dumps(state, indent=1) + "\n")
    if d.exists():
        shutil.rmtree(d)
    tmp.rename(d)  # a checkpoint directory only ever appears complete
    return d


def latest_checkpoint(run_dir: Path) -> Path | None:
    root = run_dir / "checkpoints"
    if not root.is_dir():
        return None
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and p.name.startswith("step_") and not p.name.endswith(".tmp"))
    return dirs[-1] if dirs else None


def load_state(d: Path, cfg: RunConfig) -> TrainerState:
    state = json.loads((d / "state.json").read_text())
    policy = LinearSoftmaxPolicy.load(d / "policy.ckpt")
    opt = Optimizer(cfg.actor_learning_rate, cfg.momentum)
    if (d / "velocity.npy").exists():
        opt.velocity = np.load(d / "velocity.npy")
    buffer = MemoryBuffer(cfg.buffer_size, _load_buffer(d / "buffer.npz", cfg.buffer_size))
    buffer.total_seen = state["total_seen"]
    buffer.total_accepted = state["total_accepted"]
    buffer.flushes = state["flushes"]
    buffer.trainer_calls = state["trainer_calls"]
    return TrainerState(state["step"], policy, opt, buffer)


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _truncate_csv(path: Path, last_step: int) -> None:
    if not path.exists():
        return
    lines = path.read_text().splitlines(keepends=True)
    kept = [lines[0]] + [ln for ln in lines[1:] if int(ln.split(",", 1)[0]) <= last_step]
    path.write_text("".join(kept))


# --- main loop --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainResult:
    run_dir: Path
    policy: LinearSoftmaxPolicy
    steps_done: int
    completed: bool


def train(
    cfg: RunConfig,
    run_dir: str | Path,
    *,
    resume: bool = False,
    halt_at: int | None = None,
    sft_data: Sequence[TrainingSample] | None = None,
    rft_data: Sequence[TrainingSample] | None = None,
) -> TrainResult:
    """Run (or resume) a training job. ``halt_at`` stops after that step, as an interruption would."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    gcfg, fcfg = cfg.grpo(), cfg.filter()
    (run_dir / "resolved_config.yaml").write_text(cfg.to_yaml())
    meta_path = run_dir / "metadata.json"
    meta = json.loads(meta_path.read_text()) if resume and meta_path.exists() else {}
    meta.setdefault("started", time.strftime("%Y-%m-%dT%H:%M:%S"))
    meta["last_invocation"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    meta_path.write_text(json.dumps(meta, indent=1) + "\n")

    curves = run_dir / "curves.csv"
    fstats = run_dir / "filter_stats.csv"
    ckpt = latest_checkpoint(run_dir) if resume else None
    if ckpt is not None:
        st = load_state(ckpt, cfg)
        ref = LinearSoftmaxPolicy.load(run_dir / "ref.ckpt")
        _truncate_csv(curves, st.step)
        _truncate_csv(fstats, st.step)
        log.info("resuming from %s", ckpt)
    else:
        if resume:
            log.info("no checkpoint in %s; starting fresh", run_dir)
        if (run_dir / "checkpoints").exists():
            shutil.rmtree(run_dir / "checkpoints")
        policy = LinearSoftmaxPolicy.zeros(temperature=cfg.temperature)
        demos = list(sft_data) if sft_data is not None else (sft_samples(cfg) if cfg.sft_epochs else [])
        nll = warm_start(policy, demos, cfg.sft_epochs, cfg.sft_learning_rate)
        if nll:
            log.info("warm start: NLL %.4f -> %.4f over %d epochs", nll[0], nll[-1], len(nll))
        ref = policy.copy()
        ref.save(run_dir / "ref.ckpt")
        st = TrainerState(0, policy, Optimizer(cfg.actor_learning_rate, cfg.momentum), MemoryBuffer(cfg.buffer_size))
        save_state(run_dir, st)
        curves.write_text(",".join(CURVE_COLUMNS) + "\n")
        fstats.write_text(",".join(FILTER_COLUMNS) + "\n")

    pool: list[TrainingSample] = []
    contexts: list[PlanContext] = []
    if st.step < cfg.rft_steps:
        pool = list(rft_data) if rft_data is not None else rft_samples(cfg)
        if len(pool) < cfg.rollout_batch_size:
            raise TrainingError("RFT prompt pool is smaller than rollout_batch_size")
        contexts = [context_from_ref(s.observation_ref, s.history) for s in pool]

    policy, buffer, opt = st.policy, st.buffer, st.optimizer

    def trainer(batch):
        return train_step(batch, policy, ref, gcfg, opt)

    while st.step < cfg.rft_steps:
        if halt_at is not None and st.step >= halt_at:
            return TrainResult(run_dir, policy, st.step, False)
        step = st.step + 1
        pick = substream(cfg.seed, STREAM_PROMPTS, step).choice(len(pool), size=cfg.rollout_batch_size, replace=False)
        rng = substream(cfg.seed, STREAM_SAMPLING, step)
        groups, kept, losses = [], [], []
        for i in pick:
            g = rollout_group(policy, pool[i], contexts[i], gcfg.group_size, gcfg.max_generate_len, rng)
            groups.append(g)
            try:
                accepted, report = filtering.offer(buffer, g, fcfg, trainer)
            except filtering.FlushError as exc:
                if isinstance(exc.__cause__, NumericalError):
                    raise exc.__cause__ from None  # surfaces the offending group id
                raise
            if accepted:
                kept.append(g)
            losses.extend(r.loss for r in report.results)
        all_ro = [ro for g in groups for ro in g.rollouts]
        row = (
            step,
            np.mean([ro.reward for ro in all_ro]),
            np.mean([ro.accuracy for g in kept for ro in g.rollouts]) if kept else None,
            np.mean([ro.accuracy for ro in all_ro]),
            np.mean([ro.length for ro in all_ro]),
            np.mean(losses) if losses else None,
        )
        with open(curves, "a") as fh:
            fh.write(",".join([str(step)] + [_fmt(v) for v in row[1:]]) + "\n")
        with open(fstats, "a") as fh:
            n = len(groups)
            fh.write(f"{step},{n},{len(kept)},{n - len(kept)},{_fmt(len(kept) / n)}\n")
        st.step = step
        if step % cfg.checkpoint_every == 0 or step == cfg.rft_steps or step == halt_at:
            save_state(run_dir, st)

    policy.save(run_dir / "final.ckpt")
    return TrainResult(run_dir, policy, st.step, True)


def evaluate_checkpoint(policy: LinearSoftmaxPolicy, cfg: RunConfig, n_tasks: int | None = None) -> EvalSummary:
    """Held-out evaluation on tasks seeded from ``cfg.eval_seed`` upward."""
    n = cfg.eval_tasks if n_tasks is None else n_tasks
    tasks, scenes = [], []
    for s in range(cfg.eval_seed, cfg.eval_seed + n):
        t, sc, _ = generate_task(s, cfg.eval_difficulty)
        tasks.append(t)
        scenes.append(sc)
    planner = PolicyPlanner(policy, substream(cfg.seed, STREAM_EVAL), cfg.max_plan_len)
    _, summary = evaluate_policy(planner, tasks, cfg.limits(), scenes)
    return summary


# --- ablations -----------------------------------------------------------------------

ABLATION_VARIANTS = ("untrained", "sft_only", "rft_only", "sft_rft", "no_filter")


def variant_config(cfg: RunConfig, variant: str) -> RunConfig:
    if variant == "sft_only":
        return cfg.replace(rft_steps=0)
    if variant == "rft_only":
        return cfg.replace(sft_epochs=0)
    if variant == "sft_rft":
        return cfg
    if variant == "no_filter":
        return cfg.replace(enable_accuracy_filter=False)
    if variant == "untrained":
        return cfg.replace(sft_epochs=0, rft_steps=0)
    raise ValueError(f"unknown ablation variant {variant!r}")


@dataclass(frozen=True)
class AblationRow:
    variant: str
    seeds: tuple[int, ...]
    success_rates: tuple[float, ...]
    progress_rates: tuple[float, ...]
    env_steps: tuple[float, ...]

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.success_rates))


def run_ablation(
    cfg: RunConfig,
    out_dir: str | Path,
    variants: Sequence[str] = ABLATION_VARIANTS,
    seeds: Sequence[int] | None = None,
) -> list[AblationRow]:
    """Train and evaluate each variant (once per seed) and write ``ablation.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.yaml").write_text(cfg.to_yaml())
    seeds = tuple(seeds) if seeds is not None else (cfg.seed,)
    rows = []
    for variant in variants:
        srs, prs, ess = [], [], []
        for seed in seeds:
            vcfg = variant_config(cfg, variant).replace(seed=seed)
            name = variant if len(seeds) == 1 else f"{variant}_seed{seed}"
            result = train(vcfg, out / name)
            s = evaluate_checkpoint(result.policy, vcfg)
            srs.append(s.success_rate)
            prs.append(s.progress_rate)
            ess.append(s.env_steps)
            log.info("%s seed %d: SR %.3f PR %.3f ES %.2f", variant, seed, s.success_rate, s.progress_rate, s.env_steps)
        rows.append(AblationRow(variant, seeds, tuple(srs), tuple(prs), tuple(ess)))
    with open(out / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "success_rate", "progress_rate", "env_steps", "seeds"])
        for r in rows:
            w.writerow(
                [
                    r.variant,
                    repr(r.success_rate),
                    repr(float(np.mean(r.progress_rates))),
                    repr(float(np.mean(r.env_steps))),
                    " ".join(map(str, r.seeds)),
                ]
            )
    return rows
