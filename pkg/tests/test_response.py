import json

from hypothesis import given
from hypothesis import strategies as st

from embodied_rft.catalog import bundled_catalog
from embodied_rft.response import (
    PlanResponse,
    PlanStep,
    extract_action_sequence,
    parse_response,
    render_response,
)
from fixtures import alfred_steps, response_json


def test_eleven_step_response_parses_fully():
    steps = alfred_steps(bundled_catalog("alfred"))
    resp = parse_response(response_json(steps))
    assert resp.parse_ok and resp.has_all_top_level_fields
    assert resp.n_steps == 11 and resp.n_well_formed == 11


def test_plain_text_is_unparseable():
    resp = parse_response("hello world")
    assert not resp.parse_ok
    assert resp.n_steps == 0 and not resp.has_all_top_level_fields


def test_fenced_block_with_one_ill_formed_step():
    body = response_json([(64, "find a Ladle")])
    obj = json.loads(body)
    obj["executable_plan"].append({"action_name": "pick up the Ladle"})
    raw = "Sure! Here is the plan:\n```json\n" + json.dumps(obj, indent=2) + "\n```\nGood luck."
    resp = parse_response(raw)
    assert resp.parse_ok and resp.n_steps == 2 and resp.n_well_formed == 1


def test_prose_with_braces_before_the_object():
    raw = "Note {this is not json} and then " + response_json([(1, "goto apple")])
    resp = parse_response(raw)
    assert resp.parse_ok and resp.n_steps == 1


def test_braces_inside_strings_do_not_confuse_the_scan():
    raw = response_json([(1, "goto apple")], language_plan="use } and { freely")
    assert parse_response(raw).language_plan == "use } and { freely"


def test_step_typing_rules():
    plan = [
        {"action_id": 3.0, "action_name": "x"},  # fractional-typed number is not an integer
        {"action_id": True, "action_name": "x"},  # booleans are not integers
        {"action_id": 3, "action_name": 4},
        "not an object",
        {"action_id": 3, "action_name": "x", "extra": 1},
    ]
    resp = parse_response(json.dumps({"executable_plan": plan}))
    assert [s.well_formed for s in resp.executable_plan] == [False, False, False, False, True]
    assert not resp.has_all_top_level_fields


def test_presence_versus_nonempty_structure_check():
    raw = response_json([], reasoning_and_reflection="")
    assert parse_response(raw).has_all_top_level_fields
    assert not parse_response(raw, require_nonempty=True).has_all_top_level_fields


def test_extract_action_sequence_examples():
    resp = parse_response(response_json([(64, "find a Ladle"), (109, "pick up the Ladle")]))
    assert extract_action_sequence(resp) == [(64, "find a ladle"), (109, "pick up the ladle")]
    assert extract_action_sequence(parse_response(response_json([]))) == []
    obj = json.loads(response_json([(1, "goto apple"), (2, "goto mug"), (3, "goto cup")]))
    del obj["executable_plan"][1]["action_id"]
    assert extract_action_sequence(parse_response(json.dumps(obj))) == [(1, "goto apple"), (3, "goto cup")]


def test_unparseable_input_has_no_plan():
    for raw in ["", "{", "[1, 2, 3]", "{'single': 'quotes'}", "}{"]:
        resp = parse_response(raw)
        assert resp == PlanResponse()


# --- properties -------------------------------------------------------------------

_step = st.one_of(
    st.fixed_dictionaries({"action_id": st.integers(-5, 300), "action_name": st.text(max_size=20)}),
    st.fixed_dictionaries({"action_id": st.integers(0, 9)}),
    st.fixed_dictionaries({"action_name": st.text(max_size=5)}),
)
_response = st.fixed_dictionaries(
    {},
    optional={
        "reasoning_and_reflection": st.text(max_size=30),
        "visual_state_description": st.text(max_size=30),
        "language_plan": st.text(max_size=30),
        "executable_plan": st.lists(_step, max_size=6),
        "unknown_key": st.integers(),
    },
)


@given(st.text(max_size=200))
def test_parser_is_total(raw):
    resp = parse_response(raw)
    assert isinstance(resp, PlanResponse)
    if not resp.parse_ok:
        assert resp.n_steps == 0 and not resp.has_all_top_level_fields


@given(_response, st.sampled_from(["", "Answer: ", "```json\n"]))
def test_serialize_reparse_is_stable(obj, prefix):
    resp = parse_response(prefix + json.dumps(obj))
    assert resp.parse_ok
    again = parse_response(resp.to_json())
    assert again == resp
    assert len(extract_action_sequence(resp)) <= resp.n_steps


def test_render_response_round_trip():
    text = render_response([(0, "goto countertop"), (10, "pickup apple")], reasoning="r", visual="v")
    resp = parse_response(text)
    assert resp.has_all_top_level_fields
    assert resp.executable_plan == (PlanStep(0, "goto countertop"), PlanStep(10, "pickup apple"))
    assert resp.language_plan == "goto countertop, then pickup apple"
