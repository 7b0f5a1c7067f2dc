"""Set partitions of outcome indices and their lattice operations.

A :class:`Partition` stands in both for a measurable partition and, through
its atoms, for the sub-sigma-field it generates. Internally a partition is a
restricted growth string: ``labels[i]`` is the block index of outcome ``i``,
with blocks numbered by their smallest element. That form is canonical, so
equality and hashing are structural.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from condent.space import Event, FiniteSpace, _indicator

#: Largest ``N`` accepted by :func:`count_partitions`.
MAX_COUNT_N = 20
#: Largest outcome count for exhaustive partition enumeration (Bell(10) = 115975).
MAX_ENUM_N = 10


def _canonical_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size == 0:
        return np.zeros(0, dtype=np.int64)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()]


class Partition:
    """A partition of ``{0, ..., n-1}`` into nonempty disjoint blocks."""

    def __init__(self, blocks: Iterable[Iterable[int]], n: int | None = None):
        blocks = [sorted(int(i) for i in b) for b in blocks]
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be nonempty")
        members = [i for b in blocks for i in b]
        if n is None:
            n = len(members)
        if len(members) != len(set(members)):
            raise ValueError("partition blocks overlap")
        if set(members) != set(range(n)):
            raise ValueError(f"blocks do not cover exactly the outcomes 0..{n - 1}")
        labels = np.empty(n, dtype=np.int64)
        for k, b in enumerate(blocks):
            labels[b] = k
        self._set_labels(_canonical_labels(labels))

    def _set_labels(self, labels: np.ndarray) -> None:
        labels.setflags(write=False)
        self._labels = labels
        self._nblocks = int(labels.max()) + 1 if labels.size else 0

    @classmethod
    def from_labels(cls, labels) -> Partition:
        """Build from an arbitrary per-outcome block key (any hashable ints)."""
        obj = cls.__new__(cls)
        obj._set_labels(_canonical_labels(labels))
        return obj

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def n(self) -> int:
        """Number of outcomes partitioned."""
        return self._labels.size

    @cached_property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        order = np.argsort(self._labels, kind="stable")
        bounds = np.cumsum(np.bincount(self._labels, minlength=self._nblocks))[:-1]
        return tuple(tuple(b.tolist()) for b in np.split(order, bounds))

    def __len__(self) -> int:
        return self._nblocks

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.blocks)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self._labels, other._labels)

    def __hash__(self):
        return hash(self._labels.tobytes())

    def __repr__(self):
        if self.n <= 16:
            body = ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
            return f"Partition({{{body}}})"
        return f"Partition(n={self.n}, blocks={len(self)})"


@dataclass(frozen=True)
class Filtration:
    """An increasing sequence of partitions with a designated limit.

    ``limit`` defaults to the join of all levels.
    """

    levels: tuple[Partition, ...]
    limit: Partition | None = None

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("a filtration needs at least one level")
        object.__setattr__(self, "levels", levels)
        n = levels[0].n
        for k, (lo, hi) in enumerate(zip(levels, levels[1:]), start=1):
            if hi.n != n or not _refines_exact(lo, hi):
                raise ValueError(f"level {k + 1} does not refine level {k}")
        if self.limit is None:
            limit = levels[0]
            for p in levels[1:]:
                limit = join(limit, p)
            object.__setattr__(self, "limit", limit)
        elif self.limit.n != n or not _refines_exact(levels[-1], self.limit):
            raise ValueError("limit does not refine the last level")

    def __len__(self):
        return len(self.levels)

    def level(self, n: int) -> Partition:
        """1-indexed access, matching n = 1, 2, ..."""
        if not 1 <= n <= len(self.levels):
            raise IndexError(f"level {n} outside 1..{len(self.levels)}")
        return self.levels[n - 1]


def check_partition(space: FiniteSpace, xi: Partition) -> None:
    if not isinstance(xi, Partition):
        raise TypeError(f"expected Partition, got {type(xi).__name__}")
    if xi.n != space.size:
        raise ValueError(f"partition of {xi.n} outcomes used on a space of size {space.size}")


def _same_n(xi: Partition, eta: Partition) -> None:
    if xi.n != eta.n:
        raise ValueError(f"partitions over different outcome sets ({xi.n} vs {eta.n})")


def trivial_partition(n: int) -> Partition:
    return Partition.from_labels(np.zeros(n, dtype=np.int64))


def point_partition(space: FiniteSpace | int) -> Partition:
    n = space if isinstance(space, int) else space.size
    return Partition.from_labels(np.arange(n))


def _refines_exact(xi: Partition, eta: Partition) -> bool:
    # xi <= eta iff the eta-label determines the xi-label.
    k = len(eta)
    first = np.full(k, -1, dtype=np.int64)
    first[eta.labels[::-1]] = xi.labels[::-1]
    return bool(np.array_equal(first[eta.labels], xi.labels))


def refines(space: FiniteSpace, xi: Partition, eta: Partition, exact: bool = False) -> bool:
    """Test ``xi <= eta``: every block of ``xi`` is a union of blocks of ``eta``.

    By default the test is mod 0, ignoring zero-weight outcomes.
    """
    check_partition(space, xi)
    check_partition(space, eta)
    if exact:
        return _refines_exact(xi, eta)
    keep = space.weights > 0
    return _refines_exact(
        Partition.from_labels(xi.labels[keep]), Partition.from_labels(eta.labels[keep])
    )


def join(xi: Partition, eta: Partition) -> Partition:
    """Common refinement: nonempty intersections of a xi-block and an eta-block."""
    _same_n(xi, eta)
    return Partition.from_labels(xi.labels * len(eta) + eta.labels)


def meet(xi: Partition, eta: Partition) -> Partition:
    """Finest common coarsening."""
    _same_n(xi, eta)
    n = xi.n
    if n == 0:
        return xi
    # Outcomes are joined through shared block nodes.
    kx = len(xi)
    size = n + kx + len(eta)
    rows = np.concatenate([np.arange(n), np.arange(n)])
    cols = np.concatenate([n + xi.labels, n + kx + eta.labels])
    graph = coo_matrix((np.ones(2 * n), (rows, cols)), shape=(size, size))
    _, comp = connected_components(graph, directed=False)
    return Partition.from_labels(comp[:n])


def _patterns(space: FiniteSpace, gamma: Sequence) -> np.ndarray:
    """Membership matrix: one row per outcome, one column per generator."""
    if not gamma:
        return np.zeros((space.size, 0), dtype=bool)
    return np.stack([_indicator(space, g) for g in gamma], axis=1)


def atoms_from_generators(space: FiniteSpace, gamma: Sequence) -> Partition:
    """Atom partition of the sigma-field generated by the sets in ``gamma``.

    Outcomes sharing a membership pattern across all generators fall into
    the same block.
    """
    pat = _patterns(space, gamma)
    if pat.shape[1] == 0:
        return trivial_partition(space.size)
    _, inverse = np.unique(pat, axis=0, return_inverse=True)
    return Partition.from_labels(inverse.ravel())


def separates_points(space: FiniteSpace, gamma: Sequence, event) -> bool:
    """True iff distinct outcomes of ``event`` have distinct membership patterns."""
    idx = np.array(sorted(_as_event(space, event)), dtype=np.int64)
    if idx.size < 2:
        return True
    pat = _patterns(space, gamma)[idx]
    if pat.shape[1] == 0:
        return False
    return np.unique(pat, axis=0).shape[0] == idx.size


def _as_event(space: FiniteSpace, event) -> Event:
    event = Event(event)
    _indicator(space, event)
    return event


def extend_with_complement(space: FiniteSpace, event, blocks_of_event) -> Partition:
    """Partition of the whole space: the given blocks of ``event`` plus its complement."""
    event = _as_event(space, event)
    blocks = [frozenset(int(i) for i in b) for b in blocks_of_event]
    covered = [i for b in blocks for i in b]
    if any(not b for b in blocks) or len(covered) != len(set(covered)) or set(covered) != event:
        raise ValueError("blocks do not partition the event exactly")
    rest = set(range(space.size)) - event
    if rest:
        blocks.append(frozenset(rest))
    return Partition(blocks, n=space.size)


def refining_chain(space: FiniteSpace, gamma: Sequence) -> list[Partition]:
    """``chain[k]`` is the atom partition of the first ``k`` generators."""
    return [atoms_from_generators(space, gamma[:k]) for k in range(len(gamma) + 1)]


def count_partitions(n: int) -> tuple[int, list[int]]:
    """Bell number and Stirling numbers of the second kind ``S(n, 0..n)``."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_COUNT_N:
        raise ValueError(f"N must be an integer in 1..{MAX_COUNT_N}, got {n!r}")
    row = [1]  # S(0, 0)
    for m in range(1, n + 1):
        row = [0] + [k * (row[k] if k < len(row) else 0) + row[k - 1] for k in range(1, m + 1)]
    return sum(row), row


def enumerate_partitions(n: int) -> Iterator[Partition]:
    """Every set partition of ``{0, ..., n-1}``, via restricted growth strings."""
    if not 0 <= n <= MAX_ENUM_N:
        raise ValueError(f"exhaustive enumeration is capped at {MAX_ENUM_N} outcomes")
    if n == 0:
        yield Partition([], n=0)
        return
    rgs = [0] * n
    maxes = [0] * n  # maxes[i] = max(rgs[:i+1])
    while True:
        yield Partition.from_labels(np.array(rgs))
        i = n - 1
        while i > 0 and rgs[i] > maxes[i - 1]:
            i -= 1
        if i == 0:
            return
        rgs[i] += 1
        maxes[i] = max(maxes[i - 1], rgs[i])
        for j in range(i + 1, n):
            rgs[j] = 0
            maxes[j] = maxes[i]


def coarsenings(a: Partition) -> Iterator[Partition]:
    """Every partition whose blocks are unions of blocks of ``a``."""
    for p in enumerate_partitions(len(a)):
        yield Partition.from_labels(p.labels[a.labels])


# Text format: one block per line, comma-separated outcome indices.

def format_partition(xi: Partition) -> str:
    return "".join(",".join(map(str, b)) + "\n" for b in xi.blocks)


def parse_partition(text: str, n: int | None = None) -> Partition:
    blocks = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            blocks.append([int(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: not a comma-separated index list: {line!r}") from exc
    return Partition(blocks, n=n)
