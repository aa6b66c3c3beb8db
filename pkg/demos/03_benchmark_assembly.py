#!/usr/bin/env python3
"""Walkthrough: assembling an evaluation subset from annotated images.

Images with bad rotation metadata or a single object class are
excluded; very busy images (more than 6 unique classes) are admitted
unconditionally; the rest are pooled by class count and selected
greedily to maximize the entropy of the running class distribution.
The selected set is then partitioned by how novel its classes are, and
caption diversity is summarized with unique n-gram counts.
"""

import random
from collections import Counter

from lexbeam import (
    Domain,
    DomainSpec,
    ImageRecord,
    Rotation,
    classify_domain,
    exclude,
    ngram_stats,
    sample,
    tokenize,
)

CLASSES = ["person", "car", "dog", "tree", "boat", "bird", "chair", "lamp",
           "jellyfish", "tank", "camel", "lantern"]


def synthesize_images(count, seed):
    rng = random.Random(seed)
    images = []
    for i in range(count):
        rotation = rng.choice([Rotation.ZERO] * 8 + [Rotation.NONZERO, Rotation.UNKNOWN])
        n = rng.choice([1] * 2 + [2, 2, 3, 3, 4, 5, 6, 7, 8])
        images.append(ImageRecord(f"im{i:04d}", frozenset(rng.sample(CLASSES, n)), rotation))
    return images


def main():
    images = synthesize_images(300, seed=42)
    eligible, auto = exclude(images)
    print(f"{len(images)} images -> {len(eligible)} eligible, "
          f"{len(auto)} auto-included, "
          f"{len(images) - len(eligible) - len(auto)} excluded")

    state = sample(eligible, auto, target_count=len(auto) + 80, n_candidates=5, seed=7)
    print(f"selected {len(state.selected)} images in {len(state.trace)} pooled turns")

    frequencies = Counter(state.class_counts)
    print("most common classes in the selection:",
          ", ".join(f"{c}:{n}" for c, n in frequencies.most_common(5)))

    print("\n== domain partition of the selection ==")
    spec = DomainSpec(
        in_domain=frozenset({"person", "car", "dog", "tree", "chair", "boat", "bird", "lamp"}),
        out_of_domain=frozenset({"jellyfish", "tank", "camel", "lantern"}),
    )
    by_id = {img.image_id: img for img in images}
    buckets = Counter(classify_domain(by_id[i], spec) for i in state.selected)
    for domain in Domain:
        print(f"  {domain.value:<14} {buckets[domain]}")

    print("\n== caption diversity ==")
    captions = [
        "A dog chasing a red ball in the park.",
        "Two camels resting near a lantern-lit market.",
        "A jellyfish drifting in dark blue water.",
        "The dog and the cat share a chair.",
        "A tank parked next to a gas station.",
    ]
    counts = ngram_stats([tokenize(c) for c in captions])
    print("  " + "  ".join(f"{n}-grams: {c}" for n, c in counts.items()))


if __name__ == "__main__":
    main()
