"""Approximating sets of a fine partition by unions of blocks of a coarser one.

The approximation error of ``A`` by ``B`` is ``P(A sym-diff B)``. Filtration
levels are 1-indexed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from condent.partition import Filtration, Partition, check_partition
from condent.space import Event, FiniteSpace, _indicator

MAX_EXHAUSTIVE_BLOCKS = 20
TIE_TOL = 1e-12
_CHUNK = 1 << 15


@dataclass(frozen=True)
class ApproximationResult:
    best_set: Event
    error: float
    level: int | None = None


class WorstCase(NamedTuple):
    worst_set: Event
    error: float
    blocks: tuple[int, ...]  # indices of the blocks of ``a`` forming worst_set


def best_approximation(
    space: FiniteSpace, event, a_n: Partition, level: int | None = None
) -> ApproximationResult:
    """Closest union of ``a_n`` blocks to ``event`` in symmetric-difference measure.

    A block is kept iff more than half its mass lies in ``event``; exact
    halves (within 1e-12) are dropped.
    """
    check_partition(space, a_n)
    mask = _indicator(space, event)
    w = space.weights
    k = len(a_n)
    hit = np.bincount(a_n.labels, weights=np.where(mask, w, 0.0), minlength=k)
    total = np.bincount(a_n.labels, weights=w, minlength=k)
    keep = hit - 0.5 * total > TIE_TOL
    best = keep[a_n.labels]
    error = math.fsum(w[best != mask])
    return ApproximationResult(Event(np.flatnonzero(best).tolist()), error, level)


def _lex_smallest(masks: np.ndarray, nbits: int) -> int:
    """Among bitmasks, the one whose sorted index set is lexicographically smallest."""
    masks = np.asarray(masks, dtype=np.int64)
    chosen = 0
    for bit in range(nbits):
        if np.any(masks == 0):
            return chosen
        # Every remaining mask has no bits below ``bit``.
        with_bit = masks[(masks >> bit) & 1 == 1]
        if with_bit.size:
            chosen |= 1 << bit
            masks = with_bit & ~(1 << bit)
    return chosen


def worst_case_error(space: FiniteSpace, a: Partition, a_n: Partition) -> WorstCase:
    """The union of ``a`` blocks that ``a_n`` approximates worst, by exhaustive search.

    Ties within 1e-12 go to the lexicographically smallest block-index set.
    """
    check_partition(space, a)
    check_partition(space, a_n)
    ka = len(a)
    if ka > MAX_EXHAUSTIVE_BLOCKS:
        raise ValueError(
            f"exhaustive search needs at most {MAX_EXHAUSTIVE_BLOCKS} blocks of a, got {ka}"
        )
    w = space.weights
    kn = len(a_n)
    cross = np.zeros((kn, ka))
    np.add.at(cross, (a_n.labels, a.labels), w)
    block_total = cross.sum(axis=1)
    shifts = np.arange(ka, dtype=np.int64)

    errors = np.empty(1 << ka)
    for start in range(0, 1 << ka, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, 1 << ka), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(np.float64)
        hit = bits @ cross.T
        errors[masks] = np.minimum(hit, block_total - hit).sum(axis=1)

    top = errors.max()
    mask = _lex_smallest(np.flatnonzero(errors >= top - TIE_TOL), ka)
    blocks = tuple(b for b in range(ka) if (mask >> b) & 1)
    members = Event(i for b in blocks for i in a.blocks[b])
    error = best_approximation(space, members, a_n).error
    return WorstCase(members, error, blocks)


def uniform_level(space: FiniteSpace, filtration: Filtration, a: Partition, eps: float) -> int | None:
    """Smallest 1-indexed level whose worst-case approximation error is below ``eps``."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    for n, level in enumerate(filtration.levels, start=1):
        if worst_case_error(space, a, level).error < eps:
            return n
    return None
