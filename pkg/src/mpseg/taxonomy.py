"""SYNTAX segment classes and vessel-group routing.

The 25 segment classes are keyed by canonical name ("1" .. "16c").  Numeric
ids 1..25 follow the canonical listing order below; annotation files carry
their own category ids, which are mapped through the name table on ingestion.

Routing works on label *sets*: an image whose labels touch the RCA alphabet
is an RCA view, otherwise it is an LCA view (subdivided into LCX and LAD by
a second membership test).  Note that "12a" and "12b" are deliberately not
part of the LCX membership list; pass ``lcx_includes_12ab=True`` for the
variant that adds them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .errors import EmptyLabelSet, UnknownClassName

CLASS_NAMES = (
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "9a", "10", "10a",
    "11", "12", "12a", "12b", "13", "14", "14a", "14b", "15",
    "16", "16a", "16b", "16c",
)

RCA_NAMES = frozenset({"1", "2", "3", "4", "16", "16a", "16b", "16c"})
LCX_NAMES = frozenset({"11", "12", "13", "14", "14a", "14b", "15"})
LCX_NAMES_WITH_12AB = LCX_NAMES | {"12a", "12b"}


class VesselGroup(enum.Enum):
    RCA = "RCA"
    LCA = "LCA"


class SubGroup(enum.Enum):
    RCA = "RCA"
    LCX = "LCX"
    LAD = "LAD"


@dataclass(frozen=True, order=True)
class SegmentClass:
    """One of the 25 segment labels; ``id`` is the canonical 1-based index."""

    id: int
    name: str


CLASSES = tuple(SegmentClass(i + 1, name) for i, name in enumerate(CLASS_NAMES))
BY_NAME = {c.name: c for c in CLASSES}
BY_ID = {c.id: c for c in CLASSES}

RCA_CLASSES = tuple(c for c in CLASSES if c.name in RCA_NAMES)
LCA_CLASSES = tuple(c for c in CLASSES if c.name not in RCA_NAMES)

N_CLASSES = len(CLASSES)
BACKGROUND = 0


def class_from_name(name: str) -> SegmentClass:
    """Look up a segment class by canonical name; raises UnknownClassName."""
    try:
        return BY_NAME[name]
    except KeyError:
        raise UnknownClassName(f"not a SYNTAX segment class name: {name!r}") from None


def class_from_id(class_id: int) -> SegmentClass:
    try:
        return BY_ID[class_id]
    except KeyError:
        raise UnknownClassName(f"not a SYNTAX segment class id: {class_id!r}") from None


def vessel_group(c: SegmentClass) -> VesselGroup:
    """RCA for the 8 right-tree classes, LCA for the remaining 17."""
    return VesselGroup.RCA if c.name in RCA_NAMES else VesselGroup.LCA


def group_classes(group: VesselGroup) -> tuple[SegmentClass, ...]:
    """Canonical (ascending-id) class tuple for a vessel group."""
    return RCA_CLASSES if group is VesselGroup.RCA else LCA_CLASSES


def subgroup_of_labels(
    labels: Iterable[SegmentClass], *, lcx_includes_12ab: bool = False
) -> SubGroup:
    """Classify a label set as RCA, LCX or LAD.

    Branch precedence: any RCA member wins; otherwise any LCX member makes
    the set LCX; everything else is LAD.
    """
    names = {c.name for c in labels}
    if not names:
        raise EmptyLabelSet("cannot classify an empty label set")
    if names & RCA_NAMES:
        return SubGroup.RCA
    lcx = LCX_NAMES_WITH_12AB if lcx_includes_12ab else LCX_NAMES
    if names & lcx:
        return SubGroup.LCX
    return SubGroup.LAD


def group_of_labels(
    labels: Iterable[SegmentClass], *, lcx_includes_12ab: bool = False
) -> VesselGroup:
    """Top-level RCA/LCA routing: RCA iff the subgroup test says RCA."""
    sub = subgroup_of_labels(labels, lcx_includes_12ab=lcx_includes_12ab)
    return VesselGroup.RCA if sub is SubGroup.RCA else VesselGroup.LCA


def taxonomy_table() -> list[dict]:
    """Name table rows for machine-readable export (``mpseg taxonomy``)."""
    return [
        {"id": c.id, "name": c.name, "group": vessel_group(c).value}
        for c in CLASSES
    ]
