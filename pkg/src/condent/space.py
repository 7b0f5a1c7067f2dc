"""Finite probability spaces, events and conditional probabilities."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from condent.partition import Partition

#: An event is a set of outcome indices.
Event = frozenset

SUM_TOL = 1e-9


class FiniteSpace:
    """A finite outcome set with probability weights.

    The sigma-field is implicitly the power set of the outcomes. Weights are
    stored as a read-only float64 array, renormalized once at construction.
    """

    __slots__ = ("_labels", "_weights")

    def __init__(self, weights, labels: Sequence | None = None):
        w = np.array(weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise ValueError("weights must be nonempty")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError(f"negative weight at index {int(np.argmin(w))}")
        total = float(np.sum(w))
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1 within {SUM_TOL}")
        w = w / total
        w.setflags(write=False)

        if labels is None:
            labels = range(w.size)
        elif not isinstance(labels, range):
            labels = tuple(labels)
            if len(set(labels)) != len(labels):
                raise ValueError("labels must be pairwise distinct")
        if len(labels) != w.size:
            raise ValueError(f"{len(labels)} labels for {w.size} weights")
        self._weights = w
        self._labels = labels

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def labels(self) -> Sequence:
        return self._labels

    @property
    def size(self) -> int:
        return self._weights.size

    def __len__(self) -> int:
        return self._weights.size

    def index_of(self, label) -> int:
        return self._labels.index(label)

    def __eq__(self, other):
        if not isinstance(other, FiniteSpace):
            return NotImplemented
        return (
            tuple(self._labels) == tuple(other._labels)
            and np.array_equal(self._weights, other._weights)
        )

    def __hash__(self):
        return hash((self.size, self._weights.tobytes()))

    def __repr__(self):
        if self.size <= 8:
            return f"FiniteSpace(weights={self._weights.tolist()})"
        return f"FiniteSpace(size={self.size})"


def make_space(weights, labels: Sequence | None = None) -> FiniteSpace:
    """Validate ``weights`` (and optional ``labels``) into a :class:`FiniteSpace`."""
    return FiniteSpace(weights, labels)


def uniform_space(n: int) -> FiniteSpace:
    return FiniteSpace(np.full(n, 1.0 / n))


def make_event(space: FiniteSpace, members: Iterable[int]) -> Event:
    event = Event(int(i) for i in members)
    _check_event(space, event)
    return event


def _check_event(space: FiniteSpace, event) -> None:
    for i in event:
        if not 0 <= i < space.size:
            raise IndexError(f"outcome index {i} out of range for space of size {space.size}")


def _indicator(space: FiniteSpace, event) -> np.ndarray:
    _check_event(space, event)
    mask = np.zeros(space.size, dtype=bool)
    if event:
        mask[np.fromiter(event, dtype=np.int64)] = True
    return mask


def prob(space: FiniteSpace, event) -> float:
    """Probability of ``event`` (a set of outcome indices)."""
    mask = _indicator(space, event)
    return min(1.0, float(np.sum(space.weights[mask])))


def sym_diff(a, b) -> Event:
    """Symmetric difference ``(a - b) | (b - a)``."""
    return Event(a) ^ Event(b)


def cond_prob(space: FiniteSpace, event, eta: Partition) -> np.ndarray:
    """Conditional probability of ``event`` given the blocks of ``eta``.

    Returns one value per outcome, constant on each block. Outcomes in
    zero-probability blocks get 0.
    """
    from condent.partition import check_partition

    check_partition(space, eta)
    mask = _indicator(space, event)
    labels = eta.labels
    k = len(eta)
    block_mass = np.bincount(labels, weights=space.weights, minlength=k)
    hit_mass = np.bincount(labels, weights=np.where(mask, space.weights, 0.0), minlength=k)
    ratio = np.zeros(k)
    pos = block_mass > 0
    ratio[pos] = np.minimum(hit_mass[pos] / block_mass[pos], 1.0)
    return ratio[labels]
