import json

import pytest

from embodied_rft.catalog import bundled_catalog
from embodied_rft.dataset import (
    DatasetError,
    PromptTemplate,
    Trajectory,
    decompose,
    default_template,
    parse_answer,
    read_jsonl,
    render_answer,
    sample_to_record,
    toy_samples,
    toy_trajectories,
    write_jsonl,
)
from embodied_rft.reward import ReferenceAnswer
from embodied_rft.sim import TOY_CATALOG

CAT = bundled_catalog("rft")
TEMPLATE = PromptTemplate("Goal: $goal\nHistory: $history\nActions: $catalog\n")


def traj(actions, tid="trial_T20190909_062150_965386"):
    return Trajectory(tid, "put a towel in the bin", tuple((f"img/{i}.png", a) for i, a in enumerate(actions)))


TOWEL = ["Goto handtowelholder", "Pickup handtowel", "Goto garbagecan", "Put handtowel"]


def test_four_action_trajectory_gives_four_samples():
    samples = decompose(traj(TOWEL), TEMPLATE, CAT)
    assert len(samples) == 4
    first, last = samples[0], samples[-1]
    assert first.history == () and first.answer.k == 4
    assert "History: none" in first.instruction
    assert last.history == ("goto handtowelholder", "pickup handtowel", "goto garbagecan")
    assert last.answer.actions == ("put handtowel",)
    assert "History: 1. goto handtowelholder, 2. pickup handtowel, 3. goto garbagecan" in last.instruction
    assert [s.observation_ref for s in samples] == [f"img/{i}.png" for i in range(4)]


def test_sample_ids_follow_remaining_count_convention():
    samples = decompose(traj(TOWEL), TEMPLATE, CAT)
    assert samples[0].id == "trial_T20190909_062150_965386_remain_0"
    assert samples[0].answer == ReferenceAnswer(tuple(TOWEL))
    assert [s.id.rsplit("_", 1)[1] for s in samples] == ["0", "1", "2", "3"]


def test_single_action_trajectory():
    (s,) = decompose(traj(["goto apple"]), TEMPLATE, CAT)
    assert s.history == () and s.answer.actions == ("goto apple",) and s.source_step == 1


def test_empty_trajectory_rejected():
    with pytest.raises(DatasetError):
        Trajectory("t", "g", ())


def test_template_placeholders_are_required(tmp_path):
    with pytest.raises(DatasetError, match="catalog"):
        PromptTemplate("Goal: $goal, history: $history")
    p = tmp_path / "t.txt"
    p.write_text("${goal} ${history} ${catalog}")
    assert PromptTemplate.load(p).render("g", [], CAT).startswith("g none action id 0: goto alarmclock")
    with pytest.raises(DatasetError):
        PromptTemplate.load(tmp_path / "missing.txt")


def test_default_template_renders_catalog_and_limit():
    text = default_template().render("slice the apple", ["goto countertop"], TOY_CATALOG)
    assert "action id 0: goto countertop" in text
    assert "slice the apple" in text and "1. goto countertop" in text
    assert "20 actions" in text


def test_answer_rendering_is_a_list_literal():
    assert render_answer(["Goto garbagecan", "Put handtowel"]) == "['Goto garbagecan', 'Put handtowel']"
    assert parse_answer("['Goto garbagecan', 'Put handtowel']") == ["Goto garbagecan", "Put handtowel"]
    assert parse_answer(["a b"]) == ["a b"]
    for bad in ["not a list", "[1, 2]", 7]:
        with pytest.raises(DatasetError):
            parse_answer(bad)


def test_record_layout():
    s = decompose(traj(TOWEL), TEMPLATE, CAT)[1]
    rec = sample_to_record(s)
    assert {"id", "question", "answer", "message"} <= set(rec)
    system, user = rec["message"]
    assert system["role"] == "system" and user["role"] == "user"
    assert [part["type"] for part in user["content"]] == ["image", "text"]
    assert user["content"][0]["image"] == "img/1.png"
    assert rec["answer"] == "['pickup handtowel', 'goto garbagecan', 'put handtowel']"


def test_zero_samples_write_an_empty_file(tmp_path):
    p = tmp_path / "empty.jsonl"
    assert write_jsonl([], p) == 0
    assert p.read_text() == ""
    with pytest.raises(DatasetError, match="no valid samples"):
        read_jsonl(p)


def test_round_trip_and_minimal_records(tmp_path):
    samples = toy_samples(range(20))
    p = tmp_path / "s.jsonl"
    assert write_jsonl(samples, p) == len(samples)
    assert read_jsonl(p) == samples
    # a record carrying only the four documented keys is still readable
    rec = sample_to_record(samples[0])
    minimal = {k: rec[k] for k in ("id", "question", "answer", "message")}
    q = tmp_path / "m.jsonl"
    q.write_text(json.dumps(minimal) + "\n")
    (back,) = read_jsonl(q)
    assert back.answer == samples[0].answer and back.observation_ref == samples[0].observation_ref


def _corrupt_fixture(tmp_path):
    samples = toy_samples(range(3))[:10]
    p = tmp_path / "c.jsonl"
    write_jsonl(samples, p)
    lines = p.read_text().splitlines()
    lines[6] = lines[6][: len(lines[6]) // 2]  # line 7 truncated
    p.write_text("\n".join(lines) + "\n")
    return p


def test_lenient_read_skips_and_warns(tmp_path, caplog):
    p = _corrupt_fixture(tmp_path)
    with caplog.at_level("WARNING"):
        assert len(read_jsonl(p)) == 9
    assert "line 7" in caplog.text


def test_strict_read_names_the_line(tmp_path):
    with pytest.raises(DatasetError, match="line 7"):
        read_jsonl(_corrupt_fixture(tmp_path), strict=True)


def test_history_answer_partition_on_toy_trajectories():
    for t in toy_trajectories(range(30), "long_horizon"):
        samples = decompose(t, TEMPLATE, TOY_CATALOG)
        assert len(samples) == t.k
        for n, s in enumerate(samples, start=1):
            assert s.history + s.answer.actions == t.actions
            assert s.answer.actions == t.actions[n - 1 :]
