"""Class space and agent-group partition.

A taxonomy file is a UTF-8 JSON object::

    {"groups": [{"id": "C", "display_name": "four-wheeler"}, ...],
     "classes": [{"name": "c_z1z2", "group": "C"}, ...]}

Class index is the position in ``classes``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import TaxonomyError

__all__ = [
    "AgentGroup",
    "ClassDef",
    "Taxonomy",
    "load_taxonomy",
    "parse_taxonomy",
    "group_indices",
    "default_taxonomy_path",
]


@dataclass(frozen=True)
class AgentGroup:
    id: str
    display_name: str = ""


@dataclass(frozen=True)
class ClassDef:
    index: int
    name: str
    group: str


@dataclass(frozen=True)
class Taxonomy:
    classes: tuple[ClassDef, ...]
    groups: tuple[AgentGroup, ...]

    def __post_init__(self):
        if not self.classes:
            raise TaxonomyError("taxonomy has no classes")
        group_ids = set()
        for g in self.groups:
            if not g.id or any(ch == "," or ch.isspace() for ch in g.id):
                raise TaxonomyError(f"invalid group id {g.id!r}")
            if g.id in group_ids:
                raise TaxonomyError(f"duplicate group id {g.id!r}")
            group_ids.add(g.id)
        names = set()
        for i, c in enumerate(self.classes):
            if c.index != i:
                raise TaxonomyError(f"class {c.name!r} has index {c.index}, expected {i}")
            if not c.name:
                raise TaxonomyError(f"class at index {i} has an empty name")
            if c.name in names:
                raise TaxonomyError(f"duplicate class name {c.name!r}")
            if c.group not in group_ids:
                raise TaxonomyError(f"class {c.name!r} refers to unknown group {c.group!r}")
            names.add(c.name)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    @property
    def group_ids(self) -> list[str]:
        return [g.id for g in self.groups]

    def partition(self) -> dict[str, list[int]]:
        """Map every group id to its ascending class indices."""
        return {g.id: group_indices(self, g.id) for g in self.groups}

    def to_dict(self) -> dict:
        return {
            "groups": [{"id": g.id, "display_name": g.display_name} for g in self.groups],
            "classes": [{"name": c.name, "group": c.group} for c in self.classes],
        }


def parse_taxonomy(obj) -> Taxonomy:
    """Build a validated :class:`Taxonomy` from its decoded JSON form."""
    if not isinstance(obj, dict):
        raise TaxonomyError("taxonomy must be a JSON object")
    try:
        raw_groups = obj["groups"]
        raw_classes = obj["classes"]
    except KeyError as exc:
        raise TaxonomyError(f"taxonomy is missing key {exc.args[0]!r}") from None
    if not isinstance(raw_groups, list) or not isinstance(raw_classes, list):
        raise TaxonomyError("'groups' and 'classes' must be arrays")
    try:
        groups = tuple(
            AgentGroup(str(g["id"]), str(g.get("display_name", ""))) for g in raw_groups
        )
        classes = tuple(
            ClassDef(i, str(c["name"]), str(c["group"])) for i, c in enumerate(raw_classes)
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise TaxonomyError(f"malformed taxonomy entry: {exc}") from None
    return Taxonomy(classes=classes, groups=groups)


def load_taxonomy(path) -> Taxonomy:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise TaxonomyError(f"{path}: not valid UTF-8 ({exc})") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaxonomyError(f"{path}: cannot parse taxonomy JSON: {exc}") from None
    return parse_taxonomy(obj)


def group_indices(t: Taxonomy, group_id: str) -> list[int]:
    if group_id not in t.group_ids:
        raise TaxonomyError(f"unknown group {group_id!r}")
    return [c.index for c in t.classes if c.group == group_id]


def default_taxonomy_path():
    """Path of the bundled 64-class, six-group example taxonomy."""
    return resources.files("atomfuse") / "data" / "taco_taxonomy.json"
