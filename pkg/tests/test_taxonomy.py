import numpy as np
import pytest

from helpers import ALL_NAMES, reference_route
from mpseg.errors import EmptyLabelSet, UnknownClassName
from mpseg.taxonomy import (
    BY_ID,
    BY_NAME,
    CLASSES,
    LCA_CLASSES,
    RCA_CLASSES,
    SegmentClass,
    SubGroup,
    VesselGroup,
    class_from_name,
    group_classes,
    group_of_labels,
    subgroup_of_labels,
    vessel_group,
)


def named(*names):
    return {class_from_name(n) for n in names}


def test_bijection():
    assert len(CLASSES) == 25
    assert sorted(c.id for c in CLASSES) == list(range(1, 26))
    assert len({c.name for c in CLASSES}) == 25
    for c in CLASSES:
        assert BY_NAME[c.name] is c
        assert BY_ID[c.id] is c


def test_group_sizes():
    assert len(RCA_CLASSES) == 8
    assert len(LCA_CLASSES) == 17
    assert sum(1 for c in CLASSES if vessel_group(c) is VesselGroup.RCA) == 8
    assert sum(1 for c in CLASSES if vessel_group(c) is VesselGroup.LCA) == 17


def test_class_from_name():
    assert class_from_name("9a").name == "9a"
    assert class_from_name("16c").name == "16c"
    with pytest.raises(UnknownClassName):
        class_from_name("17")
    with pytest.raises(UnknownClassName):
        class_from_name("")


def test_vessel_group_examples():
    assert vessel_group(class_from_name("3")) is VesselGroup.RCA
    assert vessel_group(class_from_name("5")) is VesselGroup.LCA
    assert vessel_group(class_from_name("16b")) is VesselGroup.RCA


def test_subgroup_examples():
    assert subgroup_of_labels(named("1", "2", "3")) is SubGroup.RCA
    assert subgroup_of_labels(named("11", "13")) is SubGroup.LCX
    assert subgroup_of_labels(named("5", "6", "7")) is SubGroup.LAD
    # 12a is absent from the LCX membership list, so it falls through to LAD
    assert subgroup_of_labels(named("12a")) is SubGroup.LAD
    assert subgroup_of_labels(named("12b")) is SubGroup.LAD


def test_subgroup_12ab_variant():
    assert subgroup_of_labels(named("12a"), lcx_includes_12ab=True) is SubGroup.LCX
    assert subgroup_of_labels(named("12b"), lcx_includes_12ab=True) is SubGroup.LCX
    # the variant flag changes nothing else
    assert subgroup_of_labels(named("5"), lcx_includes_12ab=True) is SubGroup.LAD
    assert subgroup_of_labels(named("11"), lcx_includes_12ab=True) is SubGroup.LCX


def test_group_of_labels_examples():
    assert group_of_labels(named("9", "16")) is VesselGroup.RCA
    assert group_of_labels(named("14b", "15")) is VesselGroup.LCA
    with pytest.raises(EmptyLabelSet):
        group_of_labels(set())
    with pytest.raises(EmptyLabelSet):
        subgroup_of_labels([])


def test_singleton_routing_matches_vessel_group():
    for c in CLASSES:
        assert group_of_labels({c}) is vessel_group(c)


def test_group_classes_ascending():
    for group in VesselGroup:
        ids = [c.id for c in group_classes(group)]
        assert ids == sorted(ids)


def test_random_subsets_match_reference():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        size = int(rng.integers(1, 8))
        picks = rng.choice(25, size=size, replace=False)
        names = [ALL_NAMES[i] for i in picks]
        got = subgroup_of_labels({class_from_name(n) for n in names})
        assert got.value == reference_route(names)


def test_order_insensitive():
    rng = np.random.default_rng(5)
    names = ["5", "11", "9a", "14b"]
    base = subgroup_of_labels([class_from_name(n) for n in names])
    for _ in range(10):
        shuffled = [names[i] for i in rng.permutation(len(names))]
        assert subgroup_of_labels([class_from_name(n) for n in shuffled]) is base


def test_segment_class_is_hashable_and_ordered():
    assert SegmentClass(1, "1") == class_from_name("1")
    assert sorted([class_from_name("16c"), class_from_name("1")])[0].id == 1
