"""Conditional entropy of partitions and its maximal value over coarsenings.

All entropies are in nats, with ``0 log 0 = 0``. Divergence is only ever
reported as a trend across truncation depths, never as an infinite value.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from condent.partition import (
    Filtration,
    Partition,
    check_partition,
    point_partition,
    trivial_partition,
)
from condent.space import FiniteSpace

LN2 = math.log(2.0)


@dataclass(frozen=True)
class EntropyReport:
    value: float
    by_block: tuple[float, ...]
    partition_sizes: tuple[int, int]

    def in_bits(self) -> EntropyReport:
        return EntropyReport(
            self.value / LN2, tuple(b / LN2 for b in self.by_block), self.partition_sizes
        )


def cond_entropy(space: FiniteSpace, xi: Partition, eta: Partition) -> EntropyReport:
    """H(xi | eta) in nats, with one contribution per block of ``eta``."""
    check_partition(space, xi)
    check_partition(space, eta)
    w = space.weights
    k_eta = len(eta)
    cells, inverse = np.unique(xi.labels * k_eta + eta.labels, return_inverse=True)
    p_cell = np.bincount(inverse.ravel(), weights=w)
    cell_block = cells % k_eta
    p_block = np.bincount(eta.labels, weights=w, minlength=k_eta)

    terms = np.zeros(cells.size)
    pos = p_cell > 0
    ratio = np.minimum(p_cell[pos] / p_block[cell_block[pos]], 1.0)
    terms[pos] = -p_cell[pos] * np.log(ratio)
    by_block = np.bincount(cell_block, weights=terms, minlength=k_eta) + 0.0
    return EntropyReport(
        value=float(np.sum(by_block)) + 0.0,
        by_block=tuple(by_block.tolist()),
        partition_sizes=(len(xi), len(eta)),
    )


def entropy(space: FiniteSpace, xi: Partition) -> float:
    """Unconditional H(xi)."""
    return cond_entropy(space, xi, trivial_partition(space.size)).value


def max_cond_entropy(space: FiniteSpace, a: Partition, eta: Partition) -> EntropyReport:
    """Supremum of H(xi | eta) over partitions xi coarser than ``a``.

    Conditional entropy is monotone in its first argument, so on a finite
    space the supremum is attained at ``a`` itself.
    """
    return cond_entropy(space, a, eta)


@dataclass(frozen=True)
class MartinReport:
    reports: tuple[EntropyReport, ...]
    verdict: str
    level: int  # 1-indexed level with the smallest maximal entropy
    bound: float

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.reports]


def martin_condition_report(
    space: FiniteSpace, filtration: Filtration, a: Partition, tol: float = 1e-12
) -> MartinReport:
    """Maximal conditional entropy given each level of ``filtration``.

    On a finite space every value is finite, so the verdict is always
    ``"bounded"``; ``level`` is the first level attaining the minimum.
    """
    check_partition(space, a)
    reports = tuple(max_cond_entropy(space, a, lvl) for lvl in filtration.levels)
    values = np.array([r.value for r in reports])
    best = float(values.min())
    level = int(np.flatnonzero(values <= best + tol)[0]) + 1
    if not np.all(np.isfinite(values)):
        return MartinReport(reports, "unbounded", level, math.inf)
    return MartinReport(reports, "bounded", level, best)


# Truncated countable models ---------------------------------------------------


@dataclass(frozen=True)
class TruncatedCountableModel:
    """A distribution on {1, 2, ...}, truncated at depth D with a lumped tail.

    ``mass`` maps an integer array ``k`` to unnormalized weights and
    ``normalizer`` is their total. At depth D the space has D + 1 outcomes:
    index ``k - 1`` holds outcome ``k`` and the last index holds the residual
    mass of all ``k > D``.
    """

    name: str
    mass: Callable[[np.ndarray], np.ndarray]
    normalizer: float = 1.0
    tail: Callable[[int], float] | None = None

    def weights(self, depth: int) -> np.ndarray:
        if depth < 1:
            raise ValueError("depth must be >= 1")
        w = np.asarray(self.mass(np.arange(1, depth + 1)), dtype=np.float64) / self.normalizer
        if self.tail is not None:
            r = float(self.tail(depth))
        else:
            r = 1.0 - math.fsum(w)
        if r < -1e-12:
            raise ValueError(f"{self.name}: weights up to depth {depth} exceed total mass")
        return np.append(w, max(r, 0.0))

    def space(self, depth: int) -> FiniteSpace:
        return FiniteSpace(self.weights(depth), labels=range(1, depth + 2))


def geometric_model(p: float) -> TruncatedCountableModel:
    """weight(k) = p (1 - p)^(k - 1)."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    return TruncatedCountableModel(
        name=f"geometric({p})",
        mass=lambda k: p * (1.0 - p) ** (k - 1.0),
        tail=lambda d: (1.0 - p) ** d,
    )


def geometric_entropy(p: float) -> float:
    """Entropy of the geometric law on {1, 2, ...} in nats."""
    q = 1.0 - p
    return (-p * math.log(p) - (q * math.log(q) if q > 0 else 0.0)) / p


def _heavy_mass(k):
    k = np.asarray(k, dtype=np.float64)
    return 1.0 / (k * np.log(k + 1.0) ** 2)


def _heavy_tail_sum(start: int) -> float:
    # Euler-Maclaurin: sum_{k >= start} f(k) ~ int_start^inf f + f(start)/2.
    integral, _ = integrate.quad(
        lambda t: 1.0 / (t + math.log1p(math.exp(-t))) ** 2, math.log(start), math.inf,
        epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    return integral + 0.5 * float(_heavy_mass(start))


def heavy_tail_model(cutoff: int = 10**6) -> TruncatedCountableModel:
    """weight(k) proportional to 1 / (k log^2(k + 1)); finite mass, infinite entropy.

    The normalizer is an exact partial sum up to ``cutoff`` plus an
    Euler-Maclaurin estimate of the remainder.
    """
    head = math.fsum(_heavy_mass(np.arange(1, cutoff + 1)))
    total = head + _heavy_tail_sum(cutoff + 1)

    def tail(depth: int) -> float:
        if depth >= cutoff:
            rest = _heavy_tail_sum(depth + 1)
        else:
            rest = total - math.fsum(_heavy_mass(np.arange(1, depth + 1)))
        return rest / total

    return TruncatedCountableModel(
        name="heavy_tail", mass=_heavy_mass, normalizer=total, tail=tail
    )


def point_mass_model() -> TruncatedCountableModel:
    return TruncatedCountableModel(
        name="point_mass",
        mass=lambda k: (np.asarray(k) == 1).astype(np.float64),
        tail=lambda d: 0.0,
    )


# Partition rules on truncated spaces. A rule maps depth D to a partition of
# the D + 1 outcomes of the depth-D space.

EtaRule = Callable[[int], Partition]


def trivial_rule(depth: int) -> Partition:
    return trivial_partition(depth + 1)


def points_rule(depth: int) -> Partition:
    return point_partition(depth + 1)


def threshold_rule(k: int) -> EtaRule:
    """Split {1..k} from everything above (including the tail) once depth >= k."""

    def rule(depth: int) -> Partition:
        if depth < k:
            return trivial_partition(depth + 1)
        return Partition.from_labels(np.arange(depth + 1) >= k)

    return rule


def lump(eta: Partition, depth: int) -> Partition:
    """Image of a partition of a deeper space on the depth-``depth`` space.

    Outcomes beyond ``depth`` merge into the tail atom; blocks that meet
    through the tail are merged.
    """
    n_from = eta.n
    if n_from < depth + 1:
        raise ValueError("can only lump onto a shallower depth")
    target = np.minimum(np.arange(n_from), depth)
    size = depth + 1 + len(eta)
    graph = coo_matrix(
        (np.ones(n_from), (target, depth + 1 + eta.labels)), shape=(size, size)
    )
    _, comp = connected_components(graph, directed=False)
    return Partition.from_labels(comp[: depth + 1])


@dataclass(frozen=True)
class LimitDiagnostic:
    depths: tuple[int, ...]
    values: tuple[float, ...]
    increments: tuple[float | None, ...]
    running_verdicts: tuple[str, ...]
    nondecreasing: bool
    verdict: str

    def rows(self):
        return list(zip(self.depths, self.values, self.increments, self.running_verdicts))


def _verdict(values: Sequence[float], tol: float, ceiling: float | None) -> str:
    if len(values) < 2:
        return "undetermined"
    inc = values[-1] - values[-2]
    if inc < tol:
        return "convergent"
    if ceiling is not None and values[-1] > ceiling:
        return "diverging"
    return "undetermined"


def entropy_limit_diagnostic(
    model: TruncatedCountableModel,
    eta_rule: EtaRule,
    depths: Sequence[int],
    *,
    tol: float = 1e-4,
    ceiling: float | None = None,
    slack: float = 1e-12,
) -> LimitDiagnostic:
    """Tabulate H(points_D | eta_D) over increasing truncation depths.

    Verdict is ``"convergent"`` when the last increment is below ``tol``,
    ``"diverging"`` when the value passed ``ceiling`` while still increasing,
    else ``"undetermined"``.
    """
    depths = [int(d) for d in depths]
    if not depths or any(d < 1 for d in depths):
        raise ValueError("depths must be a nonempty list of positive integers")
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError("depths must be strictly increasing")

    etas = [eta_rule(d) for d in depths]
    for d, eta in zip(depths, etas):
        if eta.n != d + 1:
            raise ValueError(f"eta rule gave {eta.n} outcomes at depth {d}, expected {d + 1}")
    for (d0, e0), e1 in zip(zip(depths, etas), etas[1:]):
        if lump(e1, d0) != e0:
            raise ValueError(f"eta rule is inconsistent between depth {d0} and the next depth")

    values = [
        cond_entropy(model.space(d), point_partition(d + 1), eta).value
        for d, eta in zip(depths, etas)
    ]
    increments = [None] + [b - a for a, b in zip(values, values[1:])]
    running = [_verdict(values[: i + 1], tol, ceiling) for i in range(len(values))]
    nondecreasing = all(inc >= -slack for inc in increments[1:])
    return LimitDiagnostic(
        depths=tuple(depths),
        values=tuple(values),
        increments=tuple(increments),
        running_verdicts=tuple(running),
        nondecreasing=nondecreasing,
        verdict=running[-1],
    )
