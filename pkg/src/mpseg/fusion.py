"""Per-class probability stacks: ensemble fusion, decoding, and the PSTK file format.

A stack holds one probability plane per class of a single vessel group
(8 RCA planes or 17 LCA planes).  Planes are float64 in memory and [0, 1]
valued; the PSTK wire format stores them as little-endian float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    ClassListMismatch,
    ClassOutsideList,
    CorruptStack,
    EmptyEnsemble,
    ShapeMismatch,
)
from .taxonomy import BY_ID, LCA_CLASSES, RCA_CLASSES, SegmentClass, VesselGroup

_RCA_SET = frozenset(RCA_CLASSES)
_LCA_SET = frozenset(LCA_CLASSES)


@dataclass(frozen=True, eq=False)
class ProbabilityStack:
    classes: tuple  # of SegmentClass, length K, the plane order
    planes: np.ndarray  # float64 (K, H, W) in [0, 1]

    def __post_init__(self):
        classes = tuple(self.classes)
        planes = np.asarray(self.planes, dtype=np.float64)
        if planes.ndim != 3:
            raise ShapeMismatch(f"planes must be (K, H, W), got {planes.shape}")
        if len(classes) != planes.shape[0]:
            raise ClassListMismatch(
                f"{len(classes)} classes for {planes.shape[0]} planes"
            )
        if len(set(classes)) != len(classes):
            raise ClassListMismatch("duplicate class in stack class list")
        class_set = set(classes)
        if class_set != _RCA_SET and class_set != _LCA_SET:
            raise ClassListMismatch(
                "stack classes must be exactly the 8 RCA or the 17 LCA classes"
            )
        if planes.size:
            if not np.isfinite(planes).all():
                raise ValueError("stack probabilities must be finite")
            if planes.min() < 0.0 or planes.max() > 1.0:
                raise ValueError("stack probabilities must lie in [0, 1]")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "planes", planes)

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    @property
    def group(self) -> VesselGroup:
        return VesselGroup.RCA if set(self.classes) == _RCA_SET else VesselGroup.LCA


def _check_members(members) -> list:
    members = list(members)
    if not members:
        raise EmptyEnsemble("ensemble has no members")
    first = members[0]
    for m in members[1:]:
        if m.classes != first.classes:
            raise ClassListMismatch("member stacks carry different class lists")
        if m.planes.shape != first.planes.shape:
            raise ShapeMismatch(
                f"member stack shapes differ: {m.planes.shape} vs {first.planes.shape}"
            )
    return members


def fuse_mean(members) -> ProbabilityStack:
    """Per-pixel, per-class arithmetic mean of the member stacks.

    Accumulated as deviations from the first member, so fusing identical
    stacks reproduces them bit-for-bit (a plain sum/n rounds for member
    counts that are not powers of two).
    """
    members = _check_members(members)
    base = members[0].planes
    if len(members) == 1:
        return ProbabilityStack(members[0].classes, base.copy())
    acc = np.zeros_like(base)
    for m in members[1:]:
        acc += m.planes - base
    acc /= len(members)
    acc += base
    np.clip(acc, 0.0, 1.0, out=acc)
    return ProbabilityStack(members[0].classes, acc)


def fuse_vote(members, threshold: float = 0.5) -> ProbabilityStack:
    """Majority-vote fusion: plane values are member vote fractions.

    Each member is decoded at ``threshold``; the output plane of class c
    holds the fraction of members whose decoded pixel label is c.  Decoding
    the result at 0.5 gives strict-majority voting.
    """
    members = _check_members(members)
    classes = members[0].classes
    votes = np.zeros_like(members[0].planes)
    for m in members:
        decoded = decode(m, threshold)
        for k, c in enumerate(classes):
            votes[k] += decoded == c.id
    votes /= len(members)
    return ProbabilityStack(classes, votes)


def decode(stack: ProbabilityStack, threshold: float = 0.5) -> np.ndarray:
    """Collapse a stack to a label mask.

    A pixel is background when its maximum class probability is below the
    threshold, otherwise it takes the argmax class; exact ties go to the
    lowest class id.
    """
    order = sorted(range(len(stack.classes)), key=lambda k: stack.classes[k].id)
    planes = stack.planes[order]
    ids = np.array([stack.classes[k].id for k in order], dtype=np.uint8)
    best = planes.argmax(axis=0)  # first max wins = lowest id after sorting
    peak = np.take_along_axis(planes, best[None], axis=0)[0]
    return np.where(peak < threshold, 0, ids[best]).astype(np.uint8)


def encode_onehot(mask: np.ndarray, classes) -> ProbabilityStack:
    """One-hot planes (1.0 on the labeled class, 0.0 elsewhere) for a mask."""
    mask = np.asarray(mask, dtype=np.uint8)
    classes = tuple(classes)
    ids = {c.id for c in classes}
    present = set(np.unique(mask).tolist()) - {0}
    if not present <= ids:
        raise ClassOutsideList(
            f"mask contains class ids {sorted(present - ids)} outside the stack classes"
        )
    planes = np.zeros((len(classes),) + mask.shape, dtype=np.float64)
    for k, c in enumerate(classes):
        planes[k] = mask == c.id
    return ProbabilityStack(classes, planes)


# --- PSTK wire format -------------------------------------------------------
#
# magic b"PSTK" | u32 version=1 | u32 H | u32 W | u32 K | K x u32 class id |
# K*H*W float32 plane values in class-major, row-major order.
# All integers and floats little-endian.

PSTK_MAGIC = b"PSTK"
PSTK_VERSION = 1


def write_pstk(stack: ProbabilityStack, path) -> None:
    header = PSTK_MAGIC + struct.pack(
        "<IIII", PSTK_VERSION, stack.height, stack.width, len(stack.classes)
    )
    ids = struct.pack(f"<{len(stack.classes)}I", *(c.id for c in stack.classes))
    payload = stack.planes.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(ids)
        fh.write(payload)


def read_pstk(path) -> ProbabilityStack:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CorruptStack(f"cannot read {path}: {exc}") from exc

    def fail(reason):
        raise CorruptStack(f"{path}: {reason}")

    if len(blob) < 20:
        fail("truncated header")
    if blob[:4] != PSTK_MAGIC:
        fail(f"bad magic {blob[:4]!r}")
    version, height, width, k = struct.unpack("<IIII", blob[4:20])
    if version != PSTK_VERSION:
        fail(f"unsupported version {version}")
    if k == 0 or height == 0 or width == 0:
        fail("zero-sized stack")
    ids_end = 20 + 4 * k
    expected = ids_end + 4 * k * height * width
    if len(blob) != expected:
        fail(f"file is {len(blob)} bytes, header implies {expected}")
    class_ids = struct.unpack(f"<{k}I", blob[20:ids_end])
    classes = []
    for cid in class_ids:
        if cid not in BY_ID:
            fail(f"unknown class id {cid}")
        classes.append(BY_ID[cid])
    planes = (
        np.frombuffer(blob[ids_end:], dtype="<f4")
        .reshape(k, height, width)
        .astype(np.float64)
    )
    try:
        return ProbabilityStack(tuple(classes), planes)
    except (ClassListMismatch, ValueError) as exc:
        raise CorruptStack(f"{path}: {exc}") from exc
