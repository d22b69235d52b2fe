"""Hand-built response fixtures shared by several test modules."""

import json

def alfred_steps(catalog, n=11):
    """``n`` consistent (id, name) pairs taken from the catalog in id order."""
    acts = list(catalog)[:n]
    return [(a.id, a.name) for a in acts]


def response_json(steps, **overrides):
    obj = {
        "reasoning_and_reflection": "The ladle is on the counter; I need it in the sink.",
        "visual_state_description": "A kitchen with a counter, a sink and a fridge.",
        "language_plan": "Find the ladle, pick it up, and carry it over.",
        "executable_plan": [{"action_id": i, "action_name": n} for i, n in steps],
    }
    obj.update(overrides)
    return json.dumps(obj)
