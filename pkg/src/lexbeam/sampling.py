"""Benchmark assembly: exclusion rules, entropy-maximizing image
selection, domain partitioning and n-gram corpus statistics.

Image selection works over pools of candidate images keyed by how many
unique object classes they contain (2 through 6). Images with more
than 6 unique classes are admitted unconditionally; the pools are then
cycled round-robin, a handful of candidates is drawn per turn, and the
candidate whose addition maximizes the Shannon entropy of the running
class distribution is kept. This stops frequent classes from
dominating the selected set.
"""

from __future__ import annotations

import math
import random
import string
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterable, Sequence

from .errors import (
    AllClassesIgnoredError,
    EmptyPoolsError,
    TargetTooSmallError,
)

AUTO_INCLUDE_MIN_CLASSES = 7  # more than 6 unique classes
POOL_KEYS = (2, 3, 4, 5, 6)


class Rotation(str, Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    UNKNOWN = "unknown"


class Domain(str, Enum):
    IN_DOMAIN = "in-domain"
    NEAR_DOMAIN = "near-domain"
    OUT_OF_DOMAIN = "out-of-domain"


@dataclass(frozen=True)
class ImageRecord:
    """One annotated image: id, the set of object classes present, and
    its recorded rotation."""

    image_id: str
    classes: frozenset[str]
    rotation: Rotation = Rotation.ZERO

    @classmethod
    def from_json(cls, obj: dict) -> "ImageRecord":
        return cls(
            image_id=str(obj["image_id"]),
            classes=frozenset(obj["classes"]),
            rotation=Rotation(obj.get("rotation", "zero")),
        )


@dataclass(frozen=True)
class DomainSpec:
    """Class partition used to bucket images by novelty."""

    in_domain: frozenset[str]
    out_of_domain: frozenset[str]
    ignored: frozenset[str] = frozenset()

    def __post_init__(self):
        overlaps = (
            (self.in_domain & self.out_of_domain)
            | (self.in_domain & self.ignored)
            | (self.out_of_domain & self.ignored)
        )
        if overlaps:
            raise ValueError(f"domain sets overlap on {sorted(overlaps)!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "DomainSpec":
        return cls(
            in_domain=frozenset(obj["in_domain"]),
            out_of_domain=frozenset(obj["out_of_domain"]),
            ignored=frozenset(obj.get("ignored", [])),
        )


@dataclass(frozen=True)
class SampleStep:
    """Trace of one selection turn: the pool drawn from, the candidate
    ids offered (in draw order) and the chosen one."""

    pool: int
    candidates: tuple[str, ...]
    chosen: str


@dataclass
class SelectionState:
    """Result of :func:`sample`: selected ids in order, the running
    presence-based class counts, the seed used and a per-step trace."""

    selected: list[str]
    class_counts: dict[str, int]
    rng_seed: int
    trace: list[SampleStep] = field(default_factory=list)


def exclude(images: Sequence[ImageRecord]) -> tuple[list[ImageRecord], list[ImageRecord]]:
    """Apply the eligibility rules.

    Images with non-zero or unknown rotation are dropped, as are images
    whose annotations contain fewer than two unique classes. Images
    with more than 6 unique classes bypass pooled sampling entirely and
    are returned as ``auto_include``; the rest are ``eligible``.
    """
    eligible: list[ImageRecord] = []
    auto_include: list[ImageRecord] = []
    for img in images:
        if img.rotation is not Rotation.ZERO:
            continue
        n = len(img.classes)
        if n < 2:
            continue
        if n >= AUTO_INCLUDE_MIN_CLASSES:
            auto_include.append(img)
        else:
            eligible.append(img)
    return eligible, auto_include


def class_entropy(counts: Iterable[int]) -> float:
    """Shannon entropy (nats) of a count distribution; 0 when empty.

    Counts are summed in sorted order so the float result depends only
    on the count multiset, never on dict or set iteration order.
    """
    counts = sorted(c for c in counts if c > 0)
    total = sum(counts)
    if total == 0:
        return 0.0
    return -sum((c / total) * math.log(c / total) for c in counts)


def _entropy_with(counts: dict[str, int], classes: frozenset[str]) -> float:
    merged = dict(counts)
    for c in classes:
        merged[c] = merged.get(c, 0) + 1
    return class_entropy(merged.values())


def sample(
    eligible: Sequence[ImageRecord],
    auto_include: Sequence[ImageRecord],
    target_count: int,
    n_candidates: int,
    seed: int,
) -> SelectionState:
    """Greedy entropy-maximizing selection.

    Starts from ``auto_include`` (all of it, seeding the class counts),
    partitions ``eligible`` into pools by unique-class count (2..6) and
    cycles the pools in ascending order. Each turn draws
    ``n_candidates`` images from the pool uniformly at random without
    replacement, keeps the one whose addition yields the highest
    entropy over class counts (ties break toward the smallest
    image_id), and returns the others to the pool. Stops when
    ``target_count`` images are selected or every pool is empty.
    """
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    if target_count < len(auto_include):
        raise TargetTooSmallError(
            f"target {target_count} below auto-include size {len(auto_include)}"
        )
    if target_count > len(auto_include) and not eligible:
        raise EmptyPoolsError("no eligible images to sample from")

    counts: dict[str, int] = {}
    selected: list[str] = []
    for img in auto_include:
        selected.append(img.image_id)
        for c in img.classes:
            counts[c] = counts.get(c, 0) + 1

    pools: dict[int, list[ImageRecord]] = {k: [] for k in POOL_KEYS}
    for img in eligible:
        n = len(img.classes)
        if n not in pools:
            raise ValueError(
                f"eligible image {img.image_id!r} has {n} classes; "
                f"run exclude() first (pools cover {POOL_KEYS})"
            )
        pools[n].append(img)

    rng = random.Random(seed)
    state = SelectionState(selected=selected, class_counts=counts, rng_seed=seed)

    while len(selected) < target_count and any(pools.values()):
        for key in POOL_KEYS:
            if len(selected) >= target_count:
                break
            pool = pools[key]
            if not pool:
                continue
            indices = rng.sample(range(len(pool)), min(n_candidates, len(pool)))
            candidates = [pool[i] for i in indices]
            chosen_at, chosen = min(
                zip(indices, candidates),
                key=lambda pair: (
                    -_entropy_with(counts, pair[1].classes),
                    pair[1].image_id,
                    pair[0],
                ),
            )
            pool.pop(chosen_at)
            selected.append(chosen.image_id)
            for c in chosen.classes:
                counts[c] = counts.get(c, 0) + 1
            state.trace.append(
                SampleStep(
                    pool=key,
                    candidates=tuple(img.image_id for img in candidates),
                    chosen=chosen.image_id,
                )
            )
    return state


def classify_domain(image: ImageRecord, spec: DomainSpec) -> Domain:
    """Bucket one image by the novelty of its classes.

    Ignored classes are stripped first. An image whose remaining
    classes are all in-domain is in-domain; one with no in-domain class
    is out-of-domain; anything mixed is near-domain. Classes listed
    nowhere count as out-of-domain.
    """
    remaining = image.classes - spec.ignored
    if not remaining:
        raise AllClassesIgnoredError(
            f"image {image.image_id!r} has only ignored classes"
        )
    has_in = bool(remaining & spec.in_domain)
    if not has_in:
        return Domain.OUT_OF_DOMAIN
    if remaining <= spec.in_domain:
        return Domain.IN_DOMAIN
    return Domain.NEAR_DOMAIN


_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})


def tokenize(text: str) -> list[str]:
    """Caption tokenization for n-gram statistics: lowercase, punctuation
    to spaces, split on whitespace."""
    return text.lower().translate(_PUNCT_TABLE).split()


def ngram_stats(
    captions: Iterable[Sequence[Hashable]], n_max: int = 4
) -> dict[int, int]:
    """Count distinct n-grams for n = 1..n_max across all captions."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    seen: dict[int, set[tuple]] = {n: set() for n in range(1, n_max + 1)}
    for caption in captions:
        toks = tuple(caption)
        for n in range(1, n_max + 1):
            grams = seen[n]
            for i in range(len(toks) - n + 1):
                grams.add(toks[i : i + n])
    return {n: len(grams) for n, grams in seen.items()}
