"""Closed action vocabulary: id <-> name mapping and name normalization.

Catalog files are either line-oriented ``id<TAB>name`` text or a JSON array of
``{"id": ..., "name": ...}`` objects. The loader detects the format from the
first non-blank character.

Action names follow a small grammar: ``<verb> [article] [object]``. The verb
(possibly two words, e.g. "pick up") determines the skill; the remainder with
a leading article stripped is the object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

SKILLS = ("goto", "pickup", "put", "open", "close", "toggle", "slice", "clean", "heat", "cool")

# Longest verbs first so "pick up" wins over "pick".
_VERB_TO_SKILL: tuple[tuple[str, str], ...] = tuple(
    sorted(
        {
            "goto": "goto",
            "go to": "goto",
            "find": "goto",
            "navigate to": "goto",
            "pickup": "pickup",
            "pick up": "pickup",
            "pick": "pickup",
            "put": "put",
            "put down": "put",
            "place at": "put",
            "place": "put",
            "drop": "put",
            "open": "open",
            "close": "close",
            "toggle": "toggle",
            "turn on": "toggle",
            "turn off": "toggle",
            "slice": "slice",
            "clean": "clean",
            "heat": "heat",
            "cool": "cool",
        }.items(),
        key=lambda kv: -len(kv[0]),
    )
)
_ARTICLES = ("a ", "an ", "the ")


class CatalogError(ValueError):
    """Raised for malformed catalog files or inconsistent entries."""


def normalize_name(raw: str) -> str:
    """Lowercase, trim and collapse internal whitespace. Idempotent."""
    return " ".join(raw.split()).lower()


def parse_action_name(name: str) -> tuple[str, str | None]:
    """Split a normalized action name into ``(skill, object)``.

    Raises CatalogError when the verb is not part of the grammar.
    """
    norm = normalize_name(name)
    for verb, skill in _VERB_TO_SKILL:
        if norm == verb:
            return skill, None
        if norm.startswith(verb + " "):
            rest = norm[len(verb) + 1 :]
            for art in _ARTICLES:
                if rest.startswith(art):
                    rest = rest[len(art) :]
                    break
            return skill, rest or None
    raise CatalogError(f"cannot derive skill from action name {name!r}")


@dataclass(frozen=True)
class Action:
    id: int
    name: str
    skill: str
    object: str | None = None

    @classmethod
    def from_name(cls, action_id: int, name: str) -> "Action":
        norm = normalize_name(name)
        skill, obj = parse_action_name(norm)
        return cls(id=action_id, name=norm, skill=skill, object=obj)


@dataclass(frozen=True)
class ActionCatalog:
    actions: tuple[Action, ...]
    _by_id: dict[int, Action] = field(init=False, repr=False, compare=False)
    _by_name: dict[str, Action] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[int, Action] = {}
        by_name: dict[str, Action] = {}
        for a in self.actions:
            if a.id < 0:
                raise CatalogError(f"negative action id {a.id}")
            if a.id in by_id:
                raise CatalogError(f"duplicate action id {a.id}")
            if a.name in by_name:
                raise CatalogError(f"duplicate action name {a.name!r}")
            by_id[a.id] = a
            by_name[a.name] = a
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_by_name", by_name)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, str]]) -> "ActionCatalog":
        return cls(tuple(Action.from_name(i, n) for i, n in pairs))

    @property
    def size(self) -> int:
        return len(self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self) -> Iterator[Action]:
        return iter(self.actions)

    def __contains__(self, action_id: object) -> bool:
        return action_id in self._by_id

    def by_id(self, action_id: int) -> Action:
        return self._by_id[action_id]

    def by_name(self, name: str) -> Action:
        return self._by_name[normalize_name(name)]

    def get_id(self, action_id: int) -> Action | None:
        return self._by_id.get(action_id)

    def get_name(self, name: str) -> Action | None:
        return self._by_name.get(normalize_name(name))

    @property
    def ids(self) -> list[int]:
        return [a.id for a in self.actions]

    def is_contiguous(self) -> bool:
        ids = sorted(self._by_id)
        return not ids or ids == list(range(ids[0], ids[0] + len(ids)))

    def to_json(self) -> str:
        return json.dumps([{"id": a.id, "name": a.name} for a in self.actions], indent=1)

    def to_tsv(self) -> str:
        return "".join(f"{a.id}\t{a.name}\n" for a in self.actions)

    def render_list(self) -> str:
        """Prompt rendering: ``action id 0: goto apple, action id 1: ...``."""
        return ", ".join(f"action id {a.id}: {a.name}" for a in self.actions)


def match_pair(catalog: ActionCatalog, action_id: int, name: str, *, strict: bool = False) -> bool:
    """True iff ``action_id`` is in the catalog and ``name`` names that action.

    With ``strict=True`` the raw name must equal the stored name byte for byte.
    """
    if isinstance(action_id, bool) or not isinstance(action_id, int) or not isinstance(name, str):
        return False
    action = catalog.get_id(action_id)
    if action is None:
        return False
    if strict:
        return name == action.name
    return normalize_name(name) == action.name


def _parse_tsv(text: str, source: str) -> list[tuple[int, str, int]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t", 1)
        if len(parts) != 2:
            raise CatalogError(f"{source}:{lineno}: expected 'id<TAB>name', got {line!r}")
        try:
            action_id = int(parts[0].strip())
        except ValueError:
            raise CatalogError(f"{source}:{lineno}: action id is not an integer: {parts[0]!r}") from None
        rows.append((action_id, parts[1], lineno))
    return rows


def _parse_json(text: str, source: str) -> list[tuple[int, str, int]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, list):
        raise CatalogError(f"{source}: JSON catalog must be an array")
    rows = []
    for i, entry in enumerate(data):
        if (
            not isinstance(entry, dict)
            or isinstance(entry.get("id"), bool)
            or not isinstance(entry.get("id"), int)
            or not isinstance(entry.get("name"), str)
        ):
            raise CatalogError(f"{source}: entry {i}: expected {{id: int, name: str}}, got {entry!r}")
        rows.append((entry["id"], entry["name"], i))
    return rows


def parse_catalog(text: str, source: str = "<string>") -> ActionCatalog:
    stripped = text.lstrip()
    if not stripped:
        raise CatalogError(f"{source}: empty catalog")
    is_json = stripped.startswith("[")
    rows = _parse_json(text, source) if is_json else _parse_tsv(text, source)
    if not rows:
        raise CatalogError(f"{source}: empty catalog")
    where = "entry" if is_json else "line"
    seen_ids: dict[int, int] = {}
    seen_names: dict[str, int] = {}
    actions = []
    for action_id, name, pos in rows:
        if action_id < 0:
            raise CatalogError(f"{source}: {where} {pos}: negative action id {action_id}")
        if action_id in seen_ids:
            raise CatalogError(
                f"{source}: {where} {pos}: duplicate id {action_id} (first at {where} {seen_ids[action_id]})"
            )
        norm = normalize_name(name)
        if not norm:
            raise CatalogError(f"{source}: {where} {pos}: empty action name")
        if norm in seen_names:
            raise CatalogError(
                f"{source}: {where} {pos}: duplicate name {norm!r} (first at {where} {seen_names[norm]})"
            )
        try:
            actions.append(Action.from_name(action_id, norm))
        except CatalogError as exc:
            raise CatalogError(f"{source}: {where} {pos}: {exc}") from None
        seen_ids[action_id] = pos
        seen_names[norm] = pos
    return ActionCatalog(tuple(actions))


def load_catalog(source: str | Path) -> ActionCatalog:
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    return parse_catalog(text, str(path))


def bundled_catalog(name: str) -> ActionCatalog:
    """Load one of the catalogs shipped with the package (``rft`` or ``alfred``)."""
    files = {"rft": "rft_catalog.tsv", "alfred": "alfred_catalog.json"}
    return load_catalog(Path(__file__).parent / "data" / files[name])


def save_catalog(catalog: ActionCatalog, path: str | Path, fmt: str = "tsv") -> None:
    text = catalog.to_json() if fmt == "json" else catalog.to_tsv()
    Path(path).write_text(text, encoding="utf-8")


def names(catalog: ActionCatalog, ids: Sequence[int]) -> list[str]:
    return [catalog.by_id(i).name for i in ids]
