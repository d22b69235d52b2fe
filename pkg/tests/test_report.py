import csv

import pytest

from embodied_rft import report
from embodied_rft.report import ReportError, read_curves, render_report
from embodied_rft.training import CURVE_COLUMNS


def write_curves(run_dir, rows):
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        w.writerows(rows)
    return run_dir


def rows(n, offset=0.0):
    return [[i, 0.5 + offset + i / 100, "" if i % 3 == 0 else 0.4, 0.5, 4.0 + i / 10, -0.01] for i in range(1, n + 1)]


def test_three_images_and_summary(tmp_path):
    run = write_curves(tmp_path / "run", rows(10))
    (run / "ablation.csv").write_text("variant,success_rate,progress_rate,env_steps\nsft_rft,0.96,0.98,7.1\n")
    files = render_report([run], tmp_path / "out")
    assert [f.name for f in files] == ["reward_curve.png", "length_curve.png", "ablation.png", "summary.csv"]
    assert all(f.stat().st_size > 0 for f in files)
    summary = list(csv.DictReader(open(tmp_path / "out" / "summary.csv")))
    assert summary[0]["run"] == "run" and summary[0]["steps"] == "10"


def test_blank_cells_read_as_nan(tmp_path):
    c = read_curves(write_curves(tmp_path / "r", rows(3)) / "curves.csv")
    assert c["step"] == [1.0, 2.0, 3.0]
    assert c["mean_accuracy_reward_filtered"][2] != c["mean_accuracy_reward_filtered"][2]  # NaN


def test_empty_curves_give_placeholders(tmp_path, monkeypatch):
    titles = []
    real = report._placeholder

    def spy(path, title):
        titles.append(title)
        return real(path, title)

    monkeypatch.setattr(report, "_placeholder", spy)
    run = write_curves(tmp_path / "empty", [])
    files = render_report([run], tmp_path / "out", "svg")
    assert titles == ["reward", "response length", "ablation"]
    assert all(f.exists() for f in files)


def test_two_runs_are_overlaid(tmp_path, monkeypatch):
    captured = {}

    def keep(fig, path):
        captured[path.name] = [len(ax.get_lines()) for ax in fig.axes]
        return path

    monkeypatch.setattr(report, "_save", keep)
    a = write_curves(tmp_path / "a", rows(5))
    b = write_curves(tmp_path / "b", rows(5, offset=0.2))
    render_report([a, b], tmp_path / "out")
    assert captured["reward_curve.png"] == [2, 4]  # total reward; original + filtered per run
    assert captured["length_curve.png"] == [2]


def test_missing_columns_are_reported(tmp_path):
    run = tmp_path / "bad"
    run.mkdir()
    (run / "curves.csv").write_text("step,loss\n1,0.5\n")
    with pytest.raises(ReportError, match="mean_total_reward"):
        render_report([run], tmp_path / "out")
    with pytest.raises(ReportError):
        render_report([run], tmp_path / "out", fmt="gif")


@pytest.mark.parametrize("fmt", ["png", "svg"])
def test_rendering_is_byte_stable(tmp_path, fmt):
    run = write_curves(tmp_path / "run", rows(8))
    first = [p.read_bytes() for p in render_report([run], tmp_path / "o1", fmt)]
    second = [p.read_bytes() for p in render_report([run], tmp_path / "o2", fmt)]
    assert first == second
