"""Static plots and a summary table from training run directories.

Inputs are the CSV files a training run writes (``curves.csv``, optionally
``ablation.csv``). Outputs are ``reward_curve``, ``length_curve`` and
``ablation`` images (PNG or SVG) plus ``summary.csv``. Several runs are
overlaid on the same axes. Missing data yields a placeholder image that says
so rather than an empty or broken figure.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "embodied-rft"  # stable element ids in SVG output
import matplotlib.pyplot as plt  # noqa: E402

from .training import CURVE_COLUMNS  # noqa: E402

ABLATION_COLUMNS = ("variant", "success_rate", "progress_rate", "env_steps")


class ReportError(ValueError):
    pass


def _read_csv(path: Path, required: Sequence[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise ReportError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(reader)


def _num(value: str) -> float:
    return float(value) if value not in ("", None) else float("nan")


def read_curves(path: str | Path) -> dict[str, list[float]]:
    rows = _read_csv(Path(path), CURVE_COLUMNS)
    return {c: [_num(r[c]) for r in rows] for c in CURVE_COLUMNS}


def read_ablation(path: str | Path) -> list[tuple[str, float]]:
    rows = _read_csv(Path(path), ABLATION_COLUMNS)
    return [(r["variant"], float(r["success_rate"])) for r in rows]


def _save(fig, path: Path) -> Path:
    # no timestamps in the files so reruns give identical bytes
    meta = {"Date": None} if path.suffix == ".svg" else {"Software": None}
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def _placeholder(path: Path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.axis("off")
    ax.text(0.5, 0.5, "no data", ha="center", va="center", fontsize=20, color="gray")
    ax.set_title(title)
    return _save(fig, path)


def plot_reward_curve(runs: dict[str, dict[str, list[float]]], path: Path) -> Path:
    runs = {k: v for k, v in runs.items() if v["step"]}
    if not runs:
        return _placeholder(path, "reward")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for label, c in runs.items():
        (line,) = axes[0].plot(c["step"], c["mean_total_reward"], label=label)
        axes[1].plot(c["step"], c["mean_accuracy_reward_original"], color=line.get_color(), label=f"{label} original")
        axes[1].plot(
            c["step"], c["mean_accuracy_reward_filtered"], color=line.get_color(), ls="--", label=f"{label} filtered"
        )
    axes[0].set(title="total reward", xlabel="step")
    axes[1].set(title="accuracy reward", xlabel="step")
    for ax in axes:
        ax.legend(fontsize=7)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_length_curve(runs: dict[str, dict[str, list[float]]], path: Path) -> Path:
    runs = {k: v for k, v in runs.items() if v["step"]}
    if not runs:
        return _placeholder(path, "response length")
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, c in runs.items():
        ax.plot(c["step"], c["mean_response_length"], label=label)
    ax.set(title="mean plan length (actions)", xlabel="step")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_ablation(bars: Sequence[tuple[str, float]], path: Path) -> Path:
    if not bars:
        return _placeholder(path, "ablation")
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [b[0] for b in bars]
    values = [100 * b[1] for b in bars]
    ax.bar(labels, values, color="tab:blue")
    for i, v in enumerate(values):
        ax.text(i, v + 1, f"{v:.1f}", ha="center", fontsize=8)
    ax.set(title="held-out success rate (%)", ylim=(0, 105))
    fig.tight_layout()
    return _save(fig, path)


def render_report(run_dirs: Sequence[str | Path], out_dir: str | Path, fmt: str = "png") -> list[Path]:
    if fmt not in ("png", "svg"):
        raise ReportError("image format must be png or svg")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs: dict[str, dict[str, list[float]]] = {}
    bars: list[tuple[str, float]] = []
    summary = []
    for d in map(Path, run_dirs):
        label = d.name
        curves_path = d / "curves.csv"
        if curves_path.exists():
            c = read_curves(curves_path)
            runs[label] = c
            if c["step"]:
                summary.append(
                    {
                        "run": label,
                        "steps": int(c["step"][-1]),
                        "final_total_reward": c["mean_total_reward"][-1],
                        "final_accuracy_original": c["mean_accuracy_reward_original"][-1],
                        "final_response_length": c["mean_response_length"][-1],
                    }
                )
        if (d / "ablation.csv").exists():
            bars.extend((f"{label}:{v}" if len(run_dirs) > 1 else v, sr) for v, sr in read_ablation(d / "ablation.csv"))
    files = [
        plot_reward_curve(runs, out / f"reward_curve.{fmt}"),
        plot_length_curve(runs, out / f"length_curve.{fmt}"),
        plot_ablation(bars, out / f"ablation.{fmt}"),
    ]
    table = out / "summary.csv"
    cols = ["run", "steps", "final_total_reward", "final_accuracy_original", "final_response_length"]
    with open(table, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(summary)
    return files + [table]
