"""Turn raw object detections into decoding constraints.

The pipeline mirrors how detector outputs are refined before being
handed to the constrained decoder: drop blacklisted classes, suppress
the coarser of two highly overlapping detections using the class
hierarchy (a "dog" box suppresses a "mammal" box sitting on top of it),
rank the survivors by confidence, keep the top few distinct classes and
expand each into its surface word forms.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Sequence

from .errors import DegenerateBoxError, UnknownClassError
from .fsm import ConstraintGroup

logger = logging.getLogger(__name__)

DEFAULT_IOU_THRESHOLD = 0.85
DEFAULT_TOP_K = 3

Box = tuple[float, float, float, float]


class FilterMode(str, Enum):
    """Which pipeline stages run; mirrors the ablation toggles."""

    FULL = "full"            # blacklist + overlap suppression
    NO_CLASS = "no-class"    # overlap suppression only
    NO_OVERLAP = "no-overlap"  # blacklist only
    NONE = "none"            # neither; rank raw detections


@dataclass(frozen=True)
class Detection:
    """One detector output: class name, confidence, axis-aligned box
    (x_min, y_min, x_max, y_max; absolute pixels or normalized, as long
    as one convention is used per file)."""

    class_name: str
    confidence: float
    box: Box

    def __post_init__(self):
        _check_box(self.box)
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @classmethod
    def from_json(cls, obj: dict) -> "Detection":
        return cls(
            class_name=str(obj["class"]),
            confidence=float(obj["score"]),
            box=tuple(float(v) for v in obj["box"]),
        )


def _check_box(box: Box) -> None:
    if len(box) != 4:
        raise DegenerateBoxError(f"box must have 4 coordinates, got {box!r}")
    x0, y0, x1, y1 = box
    if not (x0 < x1 and y0 < y1):
        raise DegenerateBoxError(f"box {box!r} has non-positive extent")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    _check_box(a)
    _check_box(b)
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


class ClassHierarchy:
    """Object-class tree with per-class surface word forms.

    Built from records ``{"class": ..., "parent": ...|null, "forms":
    [["dog"], ["dogs"]]}``. Lookups are case-insensitive; depth is the
    distance from a root, and ancestor queries follow parent links.
    """

    def __init__(self, records: Iterable[dict]):
        self._parent: dict[str, str | None] = {}
        self._forms: dict[str, tuple[tuple[str, ...], ...]] = {}
        self._names: dict[str, str] = {}
        for rec in records:
            name = str(rec["class"])
            key = name.casefold()
            if key in self._parent:
                raise ValueError(f"duplicate class {name!r}")
            parent = rec.get("parent")
            forms = tuple(tuple(form) for form in rec.get("forms", []))
            if not forms:
                raise ValueError(f"class {name!r} has no word forms")
            self._parent[key] = None if parent is None else str(parent).casefold()
            self._forms[key] = forms
            self._names[key] = name
        self._depth: dict[str, int] = {}
        for key in self._parent:
            self._compute_depth(key)

    def _compute_depth(self, key: str) -> int:
        if key in self._depth:
            return self._depth[key]
        chain = []
        cur: str | None = key
        while cur is not None and cur not in self._depth:
            if cur in chain:
                raise ValueError(f"hierarchy cycle through {cur!r}")
            chain.append(cur)
            nxt = self._parent.get(cur)
            if nxt is not None and nxt not in self._parent:
                raise UnknownClassError(f"parent {nxt!r} of {cur!r} not defined")
            cur = nxt
        base = -1 if cur is None else self._depth[cur]
        for i, name in enumerate(reversed(chain)):
            self._depth[name] = base + 1 + i
        return self._depth[key]

    @classmethod
    def from_file(cls, path: str) -> "ClassHierarchy":
        with open(path, "r", encoding="utf-8") as fp:
            return cls(json.load(fp))

    def __contains__(self, class_name: str) -> bool:
        return class_name.casefold() in self._parent

    def _key(self, class_name: str) -> str:
        key = class_name.casefold()
        if key not in self._parent:
            raise UnknownClassError(f"class {class_name!r} not in hierarchy")
        return key

    def depth(self, class_name: str) -> int:
        return self._depth[self._key(class_name)]

    def word_forms(self, class_name: str) -> tuple[tuple[str, ...], ...]:
        return self._forms[self._key(class_name)]

    def is_strict_ancestor(self, ancestor: str, descendant: str) -> bool:
        """True iff ``ancestor`` lies strictly above ``descendant``."""
        top = self._key(ancestor)
        cur = self._parent[self._key(descendant)]
        while cur is not None:
            if cur == top:
                return True
            cur = self._parent[cur]
        return False

    def classes(self) -> tuple[str, ...]:
        return tuple(self._names[k] for k in sorted(self._names))


@dataclass(frozen=True)
class Blacklist:
    """Class names excluded from ever becoming constraints."""

    classes: frozenset[str]

    def __contains__(self, class_name: str) -> bool:
        return class_name.casefold() in self.classes

    def __len__(self) -> int:
        return len(self.classes)

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "Blacklist":
        return cls(frozenset(n.casefold() for n in names))

    @classmethod
    def from_file(cls, path: str) -> "Blacklist":
        with open(path, "r", encoding="utf-8") as fp:
            names = [line.strip() for line in fp if line.strip()]
        bl = cls.from_names(names)
        logger.info("loaded blacklist with %d classes from %s", len(bl), path)
        return bl

    @classmethod
    def default(cls) -> "Blacklist":
        text = resources.files("lexbeam.data").joinpath("blacklist.txt").read_text()
        return cls.from_names(line for line in text.splitlines() if line.strip())


def default_hierarchy() -> ClassHierarchy:
    """The class hierarchy and word-form table shipped with the package."""
    text = resources.files("lexbeam.data").joinpath("hierarchy.json").read_text()
    return ClassHierarchy(json.loads(text))


def _drop_unknown(dets: Sequence[Detection], hier: ClassHierarchy) -> list[Detection]:
    kept = []
    for det in dets:
        if det.class_name in hier:
            kept.append(det)
        else:
            logger.warning(
                "dropping detection with unknown class %r (confidence %.3f)",
                det.class_name,
                det.confidence,
            )
    return kept


def suppress_overlaps(
    dets: Sequence[Detection],
    hier: ClassHierarchy,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> list[Detection]:
    """Remove the coarser of two overlapping detections.

    For every pair with IoU at or above the threshold where one class
    is a strict ancestor of the other, the ancestor is removed; pairs
    with no ancestor relation (including equal-depth classes) are both
    kept. Removals are applied one at a time, highest IoU first (ties:
    lowest confidence of the removed detection), re-checking remaining
    pairs after each removal. Survivors keep their input order.
    Detections whose class is not in the hierarchy are dropped with a
    warning.
    """
    work = _drop_unknown(dets, hier)
    while True:
        candidate = None  # (neg_iou, removed_conf, removed_pos, remove_index)
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                a, b = work[i], work[j]
                overlap = iou(a.box, b.box)
                if overlap < iou_threshold:
                    continue
                if hier.is_strict_ancestor(a.class_name, b.class_name):
                    remove = i
                elif hier.is_strict_ancestor(b.class_name, a.class_name):
                    remove = j
                else:
                    continue
                key = (-overlap, work[remove].confidence, remove)
                if candidate is None or key < candidate:
                    candidate = key
        if candidate is None:
            return work
        del work[candidate[2]]


def filter_constraints(
    dets: Sequence[Detection],
    hier: ClassHierarchy,
    blacklist: Blacklist,
    mode: FilterMode = FilterMode.FULL,
    top_k: int = DEFAULT_TOP_K,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> list[ConstraintGroup]:
    """Refine detections into at most ``top_k`` constraint groups.

    Stages: (1) drop blacklisted classes unless the mode disables it;
    (2) suppress hierarchy-overlapping detections unless disabled;
    (3) collapse repeats of a class to its best confidence; (4) rank by
    confidence and keep the ``top_k`` distinct classes; (5) expand each
    class into a :class:`~lexbeam.fsm.ConstraintGroup` over its word
    forms. Detections with classes missing from the hierarchy are
    dropped with a warning.
    """
    if top_k < 0:
        raise ValueError(f"top_k must be non-negative, got {top_k}")
    mode = FilterMode(mode)
    work = _drop_unknown(dets, hier)
    if mode in (FilterMode.FULL, FilterMode.NO_OVERLAP):
        work = [d for d in work if d.class_name not in blacklist]
    if mode in (FilterMode.FULL, FilterMode.NO_CLASS):
        work = suppress_overlaps(work, hier, iou_threshold)

    best: dict[str, Detection] = {}
    for det in work:
        key = det.class_name.casefold()
        if key not in best or det.confidence > best[key].confidence:
            best[key] = det
    ranked = sorted(
        best.values(), key=lambda d: (-d.confidence, d.class_name.casefold())
    )

    groups = []
    for det in ranked[:top_k]:
        groups.append(
            ConstraintGroup(
                label=det.class_name,
                alternatives=hier.word_forms(det.class_name),
            )
        )
    return groups
