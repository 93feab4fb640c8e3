"""Small shared helpers: harmonic means, interval arithmetic, seeding."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


def harmonic_mean(a: float, b: float) -> float:
    """Harmonic mean of two nonnegative numbers; 0 if either is 0.

    All composite scores in this package (F1, A-score, M-score) go through
    this one routine so they cannot drift apart numerically.
    """
    if a < 0 or b < 0:
        raise ValueError(f"harmonic_mean needs nonnegative inputs, got {a}, {b}")
    if a == 0 or b == 0:
        return 0.0
    return 2.0 * a * b / (a + b)


def interval_overlap(a_start: float, a_end: float, b_start: float, b_end: float) -> float:
    """Length of the intersection of two half-open intervals (0 if disjoint)."""
    return max(0.0, min(a_end, b_end) - max(a_start, b_start))


def merge_intervals(intervals: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    """Union of half-open intervals as a sorted list of disjoint intervals."""
    ordered = sorted((s, e) for s, e in intervals if e > s)
    merged: list[tuple[float, float]] = []
    for start, end in ordered:
        if merged and start <= merged[-1][1]:
            last_start, last_end = merged[-1]
            merged[-1] = (last_start, max(last_end, end))
        else:
            merged.append((start, end))
    return merged


def intersect_interval_sets(
    a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]
) -> float:
    """Total overlap length between two lists of disjoint sorted intervals."""
    total = 0.0
    i = j = 0
    while i < len(a) and j < len(b):
        total += interval_overlap(a[i][0], a[i][1], b[j][0], b[j][1])
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return total


def utterance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one utterance, derived from the corpus seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
