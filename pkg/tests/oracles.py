"""Independent brute-force reference implementations used as test oracles.

These deliberately avoid the package's own helpers: JSON is decoded with the
standard library, names are compared after an explicit lower/split/join, and
the matched prefix is found by trying every prefix length.
"""

import json


def norm(s):
    return " ".join(s.split()).lower()


def brute_prefix(pred, ref):
    """Largest m such that the first m predicted names equal the reference's."""
    best = 0
    for m in range(0, len(ref) + 1):
        if m > len(pred):
            break
        if all(pred[i] is not None and norm(pred[i]) == norm(ref[i]) for i in range(m)):
            best = m
    return best


def brute_accuracy(pred, ref):
    k = len(ref)
    n = brute_prefix(pred, ref)
    curve = sum(range(1, n + 1)) / sum(range(1, k + 1))  # triangular numbers
    penalty = -0.25 if (k == 1 and len(pred) > 1) else 0.0
    return curve, penalty, n


KEYS = ("reasoning_and_reflection", "visual_state_description", "language_plan", "executable_plan")


def _first_object(text):
    dec = json.JSONDecoder()
    text = text.replace("```json", " ").replace("```", " ")
    for i, ch in enumerate(text):
        if ch == "{":
            try:
                obj, _ = dec.raw_decode(text, i)
            except ValueError:
                continue
            if isinstance(obj, dict):
                return obj
    return None


def brute_total(text, ref, catalog_pairs):
    """Total reward from first principles; ``catalog_pairs`` maps id -> normalized name."""
    obj = _first_object(text)
    if obj is None:
        c, p, _ = brute_accuracy([], ref)
        return c + p
    structure = 0.125 if all(k in obj for k in KEYS) else 0.0
    plan = obj.get("executable_plan")
    plan = plan if isinstance(plan, list) else []
    names = []
    valid = match = 0
    for step in plan:
        ok = (
            isinstance(step, dict)
            and type(step.get("action_id")) is int
            and isinstance(step.get("action_name"), str)
        )
        names.append(step["action_name"] if ok else None)
        if ok:
            valid += 1
            if catalog_pairs.get(step["action_id"]) == norm(step["action_name"]):
                match += 1
    total = len(plan)
    r_valid = 0.125 * valid / total if total else 0.0
    r_match = 0.25 * match / total if total else 0.0
    c, p, _ = brute_accuracy(names, ref)
    return structure + r_valid + r_match + c + p
