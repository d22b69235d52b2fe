"""``erft`` command line: task generation, data building, scoring, training,
evaluation, ablations and reporting.

Exit codes: 0 success, 1 usage error (bad flags, bad config), 2 data error
(unreadable or malformed inputs, checkpoint mismatch), 3 numerical failure
(non-finite loss or gradient during training).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config as config_mod
from . import dataset, sim
from .catalog import ActionCatalog, CatalogError, bundled_catalog, load_catalog
from .config import ConfigError, RunConfig
from .dataset import DatasetError, PromptTemplate, Trajectory
from .evaluation import (
    EvalLimits,
    PolicyPlanner,
    RandomPlanner,
    empty_planner,
    evaluate_policy,
    oracle_planner,
    write_eval_csv,
)
from .grpo import NumericalError
from .policy import N_ACTIONS, N_FEATURES, CheckpointError, LinearSoftmaxPolicy
from .reward import ReferenceAnswer, score_response
from .response import parse_response

log = logging.getLogger("erft")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- helpers -------------------------------------------------------------------------


def _catalog(spec: str) -> ActionCatalog:
    if spec == "toy":
        return sim.TOY_CATALOG
    if spec in ("rft", "alfred"):
        return bundled_catalog(spec)
    return load_catalog(spec)


def _parse_sets(pairs: Sequence[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects KEY=VALUE, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def _run_config(args) -> RunConfig:
    overrides = _parse_sets(args.set or [])
    for key in ("seed", "sft_epochs", "rft_steps"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    path = config_mod.demo_config_path() if args.config == "demo" else args.config
    return config_mod.resolve(path, overrides)


def _read_tasks(tasks_dir: Path) -> list[sim.TaskSpec]:
    if not tasks_dir.is_dir():
        raise DataError(f"task directory {tasks_dir} does not exist")
    files = sorted(tasks_dir.glob("*.json"))
    if not files:
        raise DataError(f"no task files in {tasks_dir}")
    tasks = []
    for f in files:
        try:
            tasks.append(sim.TaskSpec.from_dict(json.loads(f.read_text(encoding="utf-8"))))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{f}: not a task spec ({exc})") from exc
    return tasks


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# --- subcommands ---------------------------------------------------------------------


def cmd_gen_tasks(args) -> int:
    out = Path(args.out_dir)
    (out / "tasks").mkdir(parents=True, exist_ok=True)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    manifest = []
    for seed in range(args.seed, args.seed + args.count):
        task, scene, _ = sim.generate_task(seed, args.difficulty)
        traj = dataset.oracle_trajectory(task, scene)
        _dump(task.to_dict(), out / "tasks" / f"{task.task_id}.json")
        _dump(traj.to_dict(), out / "trajectories" / f"{task.task_id}.json")
        manifest.append({"task_id": task.task_id, "seed": seed, "k": traj.k})
    _dump({"difficulty": args.difficulty, "count": args.count, "tasks": manifest}, out / "manifest.json")
    print(f"wrote {len(manifest)} tasks and trajectories to {out}")
    return EXIT_OK


def cmd_build_data(args) -> int:
    src = Path(args.trajectories_dir)
    files = sorted(src.glob("*.json")) if src.is_dir() else []
    if not files:
        raise DataError(f"no trajectory files in {src}")
    template = PromptTemplate.load(args.template) if args.template else dataset.default_template()
    catalog = _catalog(args.catalog)
    samples = []
    for f in files:
        try:
            traj = Trajectory.from_dict(json.loads(f.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{f}: not a trajectory ({exc})") from exc
        samples.extend(dataset.decompose(traj, template, catalog))
    n = dataset.write_jsonl(samples, args.out)
    print(f"{n} training samples from {len(files)} trajectories")
    return EXIT_OK


def cmd_score(args) -> int:
    catalog = _catalog(args.catalog)
    rows = []
    with open(args.responses, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                ref = ReferenceAnswer(tuple(rec["answer"]))
                rows.append((rec["id"], rec["response_text"], ref))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                if args.strict:
                    raise DataError(f"{args.responses}: line {lineno}: {exc}") from exc
                log.warning("skipping line %d: %s", lineno, exc)
    if not rows:
        raise DataError(f"{args.responses}: no scorable records")
    totals, accs, fails = [], [], 0
    with open(args.out, "w", encoding="utf-8") as out:
        for rid, text, ref in rows:
            br = score_response(parse_response(text), ref, catalog)
            totals.append(br.total)
            accs.append(br.r_accuracy)
            fails += br.r_structure == 0.0
            out.write(json.dumps({"id": rid, **br.to_dict()}, sort_keys=True) + "\n")
    print(
        f"n={len(rows)} mean_total={np.mean(totals):.6f} mean_accuracy={np.mean(accs):.6f} "
        f"format_failure_rate={fails / len(rows):.6f}"
    )
    return EXIT_OK


def _load_samples(path: str | None):
    return None if path is None else dataset.read_jsonl(path, strict=True)


def cmd_train(args) -> int:
    from .training import train

    cfg = _run_config(args)
    result = train(
        cfg,
        args.out_dir,
        resume=args.resume,
        halt_at=args.halt_at,
        sft_data=_load_samples(args.sft_data),
        rft_data=_load_samples(args.rft_data),
    )
    state = "complete" if result.completed else "halted"
    print(f"{state} at step {result.steps_done}; run directory {result.run_dir}")
    return EXIT_OK


def _planner(spec: str, cfg: RunConfig):
    if spec == "oracle":
        return oracle_planner
    if spec == "empty":
        return empty_planner
    from .training import STREAM_EVAL, substream

    rng = substream(cfg.seed, STREAM_EVAL)
    if spec == "random":
        return RandomPlanner(rng, cfg.max_plan_len)
    policy = LinearSoftmaxPolicy.load(spec, expect_shape=(N_FEATURES, N_ACTIONS))
    return PolicyPlanner(policy, rng, cfg.max_plan_len)


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    if args.tasks:
        tasks = _read_tasks(Path(args.tasks))
    else:
        n = cfg.eval_tasks if args.count is None else args.count
        tasks = [sim.generate_task(s, cfg.eval_difficulty)[0] for s in range(cfg.eval_seed, cfg.eval_seed + n)]
    planner = _planner(args.checkpoint, cfg)
    limits: EvalLimits = cfg.limits()
    results, summary = evaluate_policy(planner, tasks, limits)
    write_eval_csv(results, summary, args.out)
    p = summary.as_percent()
    print(f"tasks={summary.n_tasks} SR={p['SR']:.2f} PR={p['PR']:.2f} ES={p['ES']:.2f}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    from .training import ABLATION_VARIANTS, run_ablation

    cfg = _run_config(args)
    variants = args.variants or list(ABLATION_VARIANTS)
    unknown = [v for v in variants if v not in ABLATION_VARIANTS]
    if unknown:
        raise UsageError(f"unknown variant(s): {', '.join(unknown)}")
    seeds = args.seeds if args.seeds else None
    rows = run_ablation(cfg, args.out_dir, variants, seeds)
    for r in rows:
        print(f"{r.variant:>10}  SR={100 * r.success_rate:6.2f}  seeds={' '.join(map(str, r.seeds))}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_report

    files = render_report(args.run_dirs, args.out_dir or args.run_dirs[0], args.format)
    for f in files:
        print(f)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON config file, or 'demo' for the bundled demo config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="erft", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-tasks", help="generate toy tasks and their oracle trajectories")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--difficulty", choices=sorted(sim.LENGTH_RANGES), default="base")
    p.add_argument("--seed", type=int, default=0, help="first task seed; tasks use seed..seed+count-1")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen_tasks)

    p = sub.add_parser("build-data", help="decompose trajectories into JSONL training samples")
    p.add_argument("trajectories_dir")
    p.add_argument("--template", help="prompt template with $goal, $history and $catalog (default: bundled)")
    p.add_argument("--catalog", default="toy", help="toy, rft, alfred or a catalog file (default: toy)")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=cmd_build_data)

    p = sub.add_parser("score", help="score structured responses against reference answers")
    p.add_argument("responses", help="JSONL of {id, response_text, answer}")
    p.add_argument("--catalog", default="toy", help="toy, rft, alfred or a catalog file (default: toy)")
    p.add_argument("--out", required=True, help="output JSONL of reward breakdowns")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed input line")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="behavior-cloning warm start then filtered GRPO")
    _add_config_flags(p)
    p.add_argument("--sft-epochs", type=int, help="warm-start epochs (overrides config)")
    p.add_argument("--rft-steps", type=int, help="GRPO steps (overrides config)")
    p.add_argument("--sft-data", help="JSONL of training samples for the warm start (default: generated)")
    p.add_argument("--rft-data", help="JSONL of training samples used as RFT prompts (default: generated)")
    p.add_argument("--resume", action="store_true", help="continue from the latest checkpoint in OUT_DIR")
    p.add_argument("--halt-at", type=int, help="stop after this step, as an interruption would")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="closed-loop evaluation with replanning")
    _add_config_flags(p)
    p.add_argument("checkpoint", help="policy checkpoint, or one of: oracle, random, empty")
    p.add_argument("--tasks", help="directory of task JSON files (default: generated held-out tasks)")
    p.add_argument("--count", type=int, help="number of generated tasks (default: eval_tasks)")
    p.add_argument("--out", required=True, help="per-task and aggregate CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and evaluate the ablation variants")
    _add_config_flags(p)
    p.add_argument("--variants", nargs="+", help="subset of: untrained sft_only rft_only sft_rft no_filter")
    p.add_argument("--seeds", nargs="+", type=int, help="run every variant once per seed")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="plots and a summary table from run directories")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out-dir", help="where to write images (default: first run directory)")
    p.add_argument("--format", choices=("png", "svg"), default="png")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    from .report import ReportError
    from .training import TrainingError

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"erft: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"erft: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, DatasetError, CatalogError, CheckpointError, ReportError, TrainingError, OSError) as exc:
        print(f"erft: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
