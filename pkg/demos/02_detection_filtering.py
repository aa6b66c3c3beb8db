#!/usr/bin/env python3
"""Walkthrough: from raw detector output to decoding constraints.

Detectors emit redundant and over-general boxes. The filter removes
blacklisted classes (parts like "Human eye", over-broad ones like
"Mammal"), suppresses the coarser of two near-identical boxes using
the class hierarchy, keeps the three most confident distinct classes,
and expands each survivor into its surface word forms.
"""

from lexbeam import (
    Blacklist,
    Detection,
    FilterMode,
    default_hierarchy,
    filter_constraints,
    iou,
    suppress_overlaps,
)

DETECTIONS = [
    Detection("Mammal", 0.95, (12, 8, 410, 330)),
    Detection("Dog", 0.91, (10, 10, 400, 325)),
    Detection("Human eye", 0.99, (500, 40, 540, 70)),
    Detection("Tree", 0.85, (600, 0, 800, 400)),
    Detection("Vehicle", 0.72, (820, 100, 1000, 300)),
    Detection("Car", 0.81, (822, 102, 1001, 299)),
    Detection("Cat", 0.60, (80, 400, 200, 500)),
    Detection("Table", 0.52, (300, 420, 520, 560)),
]


def main():
    hier = default_hierarchy()
    blacklist = Blacklist.default()
    print(f"blacklist ships with {len(blacklist)} classes")

    print("\n== overlap suppression ==")
    dog, mammal = DETECTIONS[1], DETECTIONS[0]
    print(f"  iou(dog, mammal) = {iou(dog.box, mammal.box):.3f}")
    kept = suppress_overlaps([dog, mammal], hier)
    print(f"  survivors: {[d.class_name for d in kept]}  (the ancestor loses)")

    print("\n== full pipeline, stage by stage ==")
    for mode in FilterMode:
        groups = filter_constraints(DETECTIONS, hier, blacklist, mode=mode)
        labels = ", ".join(g.label for g in groups)
        print(f"  mode={mode.value:<11} -> {labels}")

    print("\n== word-form expansion of the final constraints ==")
    for group in filter_constraints(DETECTIONS, hier, blacklist):
        forms = " | ".join(" ".join(alt) for alt in group.alternatives)
        print(f"  {group.label:<6} -> {forms}")


if __name__ == "__main__":
    main()
