"""Atomic learning-objective taxonomy: LO codes, the LO record schema, loading,
validation against count manifests, chapter subsets, and search.

An atomic LO is a "provided -> action -> outcome" triple identified by a code
of the form ``TOPIC-CONCEPT-INDEX`` (e.g. ``ME-KE-2``). Several LOs share a
name (the general physics concept); the name carries the category. The
hierarchy name > action > code is what the distance metric walks.
"""
from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union


class TaxonomyError(ValueError):
    pass


class InvalidCodeFormat(TaxonomyError):
    pass


class DuplicateCode(TaxonomyError):
    pass


class MissingField(TaxonomyError):
    pass


class UnknownAction(TaxonomyError):
    pass


class UnknownCategory(TaxonomyError):
    pass


class UnknownChapter(TaxonomyError):
    pass


class InconsistentNameGroup(TaxonomyError):
    """LOs sharing a name disagree on chapter or category."""


# Code grammar: uppercase topic, uppercase/digit concept, positive index,
# ASCII hyphens. Accepts every code in the bundled chapters and rejects
# lowercase tokens, wrong separators, and zero/zero-padded indexes.
_CODE_RE = re.compile(r"^([A-Z]+)-([A-Z0-9]+)-([1-9][0-9]*)$")


@dataclass(frozen=True, order=True)
class LOCode:
    """Three-part LO identifier; canonical text form is ``topic-concept-index``."""

    topic: str
    concept: str
    index: int

    def render(self) -> str:
        return f"{self.topic}-{self.concept}-{self.index}"

    def __str__(self) -> str:
        return self.render()


def parse_lo_code(text: str) -> LOCode:
    """Parse ``"ME-KE-2"`` into its (topic, concept, index) decomposition."""
    if not isinstance(text, str):
        raise InvalidCodeFormat(f"LO code must be a string, got {type(text).__name__}")
    m = _CODE_RE.match(text.strip())
    if m is None:
        raise InvalidCodeFormat(f"not a valid LO code: {text!r}")
    return LOCode(topic=m.group(1), concept=m.group(2), index=int(m.group(3)))


def is_valid_lo_code(text: str) -> bool:
    return bool(_CODE_RE.match(text.strip()))


class ActionType(enum.Enum):
    """The four cognitive actions an atomic LO can require."""

    CONC_ID = "Conc.ID"
    CONC_PROP = "Conc.Prop"
    PROC_APP = "Proc.App"
    REP_MAP = "Rep.Map"

    def __str__(self) -> str:
        return self.value


class LOCategory(enum.Enum):
    PHYSICS_LAWS = "Physics Laws"
    REPRESENTATIONS = "Representations"
    SPECIAL_CASES = "Special Cases"

    def __str__(self) -> str:
        return self.value


def _squash(text: str) -> str:
    """Lowercase and strip everything but letters, for alias matching."""
    return re.sub(r"[^a-z]", "", text.casefold())


_ACTION_ALIASES = {_squash(a.value): a for a in ActionType}
# e.g. "Conc. ID", "conc.id", "ConcID", "Proc.app" all normalize to the same key

_CATEGORY_ALIASES = {
    "physicslaws": LOCategory.PHYSICS_LAWS,
    "physicslaw": LOCategory.PHYSICS_LAWS,
    "physics": LOCategory.PHYSICS_LAWS,
    "representations": LOCategory.REPRESENTATIONS,
    "representation": LOCategory.REPRESENTATIONS,
    "specialcases": LOCategory.SPECIAL_CASES,
    "specialcase": LOCategory.SPECIAL_CASES,
}


def parse_action(text: str) -> ActionType:
    action = _ACTION_ALIASES.get(_squash(text))
    if action is None:
        raise UnknownAction(f"unknown action type: {text!r}")
    return action


def parse_category(text: str) -> LOCategory:
    category = _CATEGORY_ALIASES.get(_squash(text))
    if category is None:
        raise UnknownCategory(f"unknown LO category: {text!r}")
    return category


def normalize_name(name: str) -> str:
    """Name equality key: trimmed, internal whitespace collapsed."""
    return " ".join(name.split())


@dataclass(frozen=True)
class LearningObjective:
    code: LOCode
    name: str
    item: str
    action: ActionType
    provided: str
    outcome: str
    category: LOCategory
    chapter: str

    @property
    def code_text(self) -> str:
        return self.code.render()

    @property
    def name_key(self) -> str:
        return normalize_name(self.name)

    def to_dict(self) -> dict:
        return {
            "code": self.code_text,
            "name": self.name,
            "item": self.item,
            "action": self.action.value,
            "provided": self.provided,
            "outcome": self.outcome,
            "category": self.category.value,
            "chapter": self.chapter,
        }


_REQUIRED_FIELDS = ("code", "name", "item", "action", "provided", "outcome", "category", "chapter")


def _lo_from_dict(entry: Mapping, position: int) -> LearningObjective:
    for key in _REQUIRED_FIELDS:
        value = entry.get(key)
        if not isinstance(value, str) or not value.strip():
            raise MissingField(f"LO entry #{position}: field {key!r} missing or empty")
    return LearningObjective(
        code=parse_lo_code(entry["code"]),
        name=entry["name"],
        item=entry["item"],
        action=parse_action(entry["action"]),
        provided=entry["provided"],
        outcome=entry["outcome"],
        category=parse_category(entry["category"]),
        chapter=entry["chapter"],
    )


@dataclass(frozen=True)
class Taxonomy:
    """Immutable, index-backed collection of LOs in file order."""

    los: tuple[LearningObjective, ...]
    _by_code: dict = field(repr=False, hash=False, compare=False, default_factory=dict)
    _position: dict = field(repr=False, hash=False, compare=False, default_factory=dict)

    def __post_init__(self):
        by_code: dict[str, LearningObjective] = {}
        position: dict[str, int] = {}
        by_name: dict[str, LearningObjective] = {}
        for i, lo in enumerate(self.los):
            text = lo.code_text
            if text in by_code:
                raise DuplicateCode(f"duplicate LO code: {text}")
            by_code[text] = lo
            position[text] = i
            seen = by_name.get(lo.name_key)
            if seen is not None and (seen.chapter != lo.chapter or seen.category != lo.category):
                raise InconsistentNameGroup(
                    f"LOs named {lo.name!r} disagree on chapter/category "
                    f"({seen.code_text} vs {lo.code_text})"
                )
            by_name.setdefault(lo.name_key, lo)
        object.__setattr__(self, "_by_code", by_code)
        object.__setattr__(self, "_position", position)

    def __len__(self) -> int:
        return len(self.los)

    def __iter__(self):
        return iter(self.los)

    def get(self, code: Union[str, LOCode]) -> Optional[LearningObjective]:
        key = code if isinstance(code, str) else code.render()
        return self._by_code.get(key)

    def __contains__(self, code: Union[str, LOCode]) -> bool:
        return self.get(code) is not None

    def position(self, code: Union[str, LOCode]) -> int:
        key = code if isinstance(code, str) else code.render()
        return self._position[key]

    @property
    def chapters(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for lo in self.los:
            seen.setdefault(lo.chapter, None)
        return tuple(seen)

    def subset_by_chapter(self, chapter: str) -> tuple[LearningObjective, ...]:
        if chapter not in self.chapters:
            raise UnknownChapter(f"chapter not in taxonomy: {chapter!r}")
        return tuple(lo for lo in self.los if lo.chapter == chapter)

    def chapter_counts(self, chapter: str) -> dict:
        """Recomputed per call so counts can never drift from the collection."""
        los = self.subset_by_chapter(chapter)
        names: dict[str, LearningObjective] = {}
        for lo in los:
            names.setdefault(lo.name_key, lo)
        actions = {a: 0 for a in ActionType}
        for lo in los:
            actions[lo.action] += 1
        categories = {c: 0 for c in LOCategory}
        for lo in names.values():
            categories[lo.category] += 1
        return {
            "codes": len(los),
            "names": len(names),
            "actions": {a.value: n for a, n in actions.items()},
            "categories": {c.value: n for c, n in categories.items()},
        }

    def search(
        self,
        query: str = "",
        chapter: Optional[str] = None,
        category: Optional[Union[str, LOCategory]] = None,
        action: Optional[Union[str, ActionType]] = None,
    ) -> list[LearningObjective]:
        """Case-insensitive substring search over code, name, and item.

        Ranking: exact code matches first, then name matches, then item
        matches; ties keep taxonomy order. Filters intersect with the query.
        """
        if isinstance(category, str):
            category = parse_category(category)
        if isinstance(action, str):
            action = parse_action(action)
        needle = query.strip().casefold()
        ranked = []
        for i, lo in enumerate(self.los):
            if chapter is not None and lo.chapter != chapter:
                continue
            if category is not None and lo.category != category:
                continue
            if action is not None and lo.action != action:
                continue
            code = lo.code_text.casefold()
            name = lo.name.casefold()
            item = lo.item.casefold()
            if needle and needle not in code and needle not in name and needle not in item:
                continue
            exact_code = needle == code
            ranked.append(((not exact_code, needle not in name, needle not in item, i), lo))
        ranked.sort(key=lambda pair: pair[0])
        return [lo for _, lo in ranked]

    def to_json(self) -> str:
        """Canonical serialization: file order, fixed key order, 2-space indent."""
        return json.dumps([lo.to_dict() for lo in self.los], indent=2, ensure_ascii=False) + "\n"


def load_taxonomy(source: Union[str, Path, Iterable[Mapping]]) -> Taxonomy:
    """Load a taxonomy from a JSON file (top-level array) or pre-parsed entries."""
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        raw = list(source)
    if not isinstance(raw, list):
        raise TaxonomyError("taxonomy file must contain a top-level array of LO objects")
    los = tuple(_lo_from_dict(entry, i) for i, entry in enumerate(raw))
    return Taxonomy(los=los)


def subset_by_chapter(taxonomy: Taxonomy, chapter: str) -> tuple[LearningObjective, ...]:
    return taxonomy.subset_by_chapter(chapter)


def search_los(
    taxonomy: Taxonomy,
    query: str = "",
    chapter: Optional[str] = None,
    category: Optional[Union[str, LOCategory]] = None,
    action: Optional[Union[str, ActionType]] = None,
) -> list[LearningObjective]:
    return taxonomy.search(query=query, chapter=chapter, category=category, action=action)


@dataclass(frozen=True)
class CountMismatch:
    chapter: str
    field: str
    expected: int
    actual: int

    def __str__(self) -> str:
        return f"{self.chapter}: {self.field} expected {self.expected}, got {self.actual}"


def manifest_of(taxonomy: Taxonomy) -> dict:
    """Manifest that the taxonomy itself satisfies (chapter -> expected counts)."""
    return {chapter: taxonomy.chapter_counts(chapter) for chapter in taxonomy.chapters}


def validate_against_manifest(taxonomy: Taxonomy, manifest: Mapping) -> list[CountMismatch]:
    """Compare per-chapter code/name/action/category counts against a manifest.

    Mismatches come back as report entries, never exceptions; an empty list
    means every listed count matches. Action and category keys may appear
    nested under "actions"/"categories" or directly on the chapter object.
    """
    report: list[CountMismatch] = []
    for chapter, expected in manifest.items():
        try:
            actual = taxonomy.chapter_counts(chapter)
        except UnknownChapter:
            actual = {
                "codes": 0,
                "names": 0,
                "actions": {a.value: 0 for a in ActionType},
                "categories": {c.value: 0 for c in LOCategory},
            }
        flat_expectations: list[tuple[str, int, int]] = []
        for key, value in expected.items():
            if key == "codes":
                flat_expectations.append(("codes", value, actual["codes"]))
            elif key == "names":
                flat_expectations.append(("names", value, actual["names"]))
            elif key == "actions":
                for action_key, count in value.items():
                    action = parse_action(action_key)
                    flat_expectations.append(
                        (f"action {action.value}", count, actual["actions"][action.value])
                    )
            elif key == "categories":
                for category_key, count in value.items():
                    category = parse_category(category_key)
                    flat_expectations.append(
                        (f"category {category.value}", count, actual["categories"][category.value])
                    )
            else:
                # bare action/category keys, e.g. {"RepMap": 0} or {"Physics": 7}
                squashed = _squash(key)
                if squashed in _ACTION_ALIASES:
                    action = _ACTION_ALIASES[squashed]
                    flat_expectations.append(
                        (f"action {action.value}", value, actual["actions"][action.value])
                    )
                elif squashed in _CATEGORY_ALIASES:
                    category = _CATEGORY_ALIASES[squashed]
                    flat_expectations.append(
                        (f"category {category.value}", value, actual["categories"][category.value])
                    )
                else:
                    raise TaxonomyError(f"manifest for {chapter!r}: unknown key {key!r}")
        for field_name, exp, act in flat_expectations:
            if exp != act:
                report.append(CountMismatch(chapter=chapter, field=field_name, expected=exp, actual=act))
    return report
