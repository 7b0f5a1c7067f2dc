"""Martingale families adapted to a filtration.

Families here are Doob martingales on finite path spaces and likelihood-ratio
martingales of product laws. Alongside them: exact martingale checks,
uniform-convergence diagnostics, the point-mass example and grid
maximum-likelihood consistency experiments.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc

from condent.entropy import EntropyReport, martin_condition_report
from condent.models import (
    AbsoluteContinuityError,
    BetaBernoulliLaw,
    DegenerateModelError,
    GaussianFieldModel,
    ParametricModel,
    _log_density,
    as_theta,
    in_domain,
    replicate_rng,
    theta_grid,
    theta_key,
)
from condent.partition import (
    Filtration,
    Partition,
    check_partition,
    refining_chain,
    trivial_partition,
)
from condent.space import FiniteSpace

BOUND_SLACK = 1e-9


class BoundViolation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MartingaleFamily:
    """Evaluator for X_n^theta along a path.

    ``fn(theta, n, path)`` must only look at the first ``n`` coordinates of
    ``path``. Families built on a finite space carry ``space`` and
    ``filtration``; paths are then outcome indices or labels.
    """

    fn: Callable
    theta_domain: tuple | None = None
    bound: float | None = None
    space: FiniteSpace | None = None
    filtration: Filtration | None = None
    name: str = "family"

    def evaluate(self, theta, n: int, path) -> float:
        value = float(self.fn(as_theta(theta), n, path))
        if self.bound is not None and abs(value) > self.bound + BOUND_SLACK:
            raise BoundViolation(
                f"{self.name}: |X_{n}^{theta_key(theta)}| = {abs(value)} exceeds bound {self.bound}"
            )
        return value

    __call__ = evaluate


# Constructions ---------------------------------------------------------------


def _block_average(space: FiniteSpace, values: np.ndarray, part: Partition) -> np.ndarray:
    k = len(part)
    mass = np.bincount(part.labels, weights=space.weights, minlength=k)
    total = np.bincount(part.labels, weights=space.weights * values, minlength=k)
    avg = np.zeros(k)
    pos = mass > 0
    avg[pos] = total[pos] / mass[pos]
    return avg[part.labels]


def doob_martingale(
    space: FiniteSpace, terminal, filtration: Filtration, bound: float | None = None
) -> MartingaleFamily:
    """X_n^theta = E[terminal(theta) | level n], for n = 0 (trivial) .. len(filtration).

    ``terminal`` is either one value per outcome or a callable mapping theta
    to such a vector. Zero-mass blocks evaluate to 0.
    """
    for lvl in filtration.levels:
        check_partition(space, lvl)
    levels = (trivial_partition(space.size),) + filtration.levels

    def vector(theta) -> np.ndarray:
        if callable(terminal):
            arg = float(theta[0]) if theta.size == 1 else theta
            v = np.asarray(terminal(arg), dtype=np.float64)
        else:
            v = np.asarray(terminal, dtype=np.float64)
        if v.shape != (space.size,):
            raise ValueError(f"terminal must give {space.size} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("terminal values must be finite")
        if bound is not None and np.max(np.abs(v)) > bound + BOUND_SLACK:
            raise ValueError(f"terminal exceeds the requested bound {bound}")
        return v

    @lru_cache(maxsize=256)
    def table(key: tuple) -> np.ndarray:
        v = vector(np.array(key))
        return np.stack([_block_average(space, v, lvl) for lvl in levels])

    if not callable(terminal):
        vector(np.zeros(1))

    def fn(theta, n, path):
        if not 0 <= n < len(levels):
            raise IndexError(f"level {n} outside 0..{len(levels) - 1}")
        if isinstance(path, (int, np.integer)):
            idx = int(path)
        else:
            idx = space.index_of(tuple(path))
        return table(tuple(theta.tolist()))[n, idx]

    return MartingaleFamily(fn, bound=bound, space=space, filtration=filtration, name="doob")


def log_likelihood_ratio(model: ParametricModel, theta, n: int, path) -> float:
    """log prod_{i<n} pmf(theta, path_i) / pmf(theta0, path_i)."""
    return _lr_evaluator(model)(as_theta(theta), n, path)


def _lr_evaluator(model: ParametricModel):
    @lru_cache(maxsize=1024)
    def table(key: tuple) -> dict:
        p = model.probs(np.array(key))
        p0 = model.probs(model.theta0)
        out = {}
        for s, pi, qi in zip(model.alphabet, p, p0):
            if qi > 0:
                out[s] = math.log(pi / qi) if pi > 0 else -math.inf
            elif pi > 0:
                out[s] = math.inf
            else:
                out[s] = -math.inf  # null under both laws
        return out

    def log_fn(theta, n, path):
        if n < 0 or n > len(path):
            raise IndexError(f"need at least {n} path coordinates, got {len(path)}")
        row = table(tuple(theta.tolist()))
        terms = [row[s] for s in itertools.islice(path, n)]
        total = math.fsum(terms) if -math.inf not in terms else -math.inf
        if total == math.inf or math.inf in terms:
            s = next(s for s in path[:n] if row[s] == math.inf)
            raise AbsoluteContinuityError(
                f"symbol {s!r} is null under theta0 but not under theta={tuple(theta)}"
            )
        return total

    return log_fn


def likelihood_ratio_family(model: ParametricModel) -> MartingaleFamily:
    """L_n^theta = prod_{i<n} pmf(theta, path_i) / pmf(theta0, path_i), a theta0-martingale."""
    log_fn = _lr_evaluator(model)

    def fn(theta, n, path):
        return math.exp(log_fn(theta, n, path))

    return MartingaleFamily(fn, theta_domain=model.theta_domain, name=f"lr[{model.name}]")


def bernoulli_posterior_family(a: float = 1.0, b: float = 1.0) -> MartingaleFamily:
    """X_n^theta = P(q <= theta | first n coordinates) under a Beta(a, b) prior on q.

    This is the Doob martingale of the indicator terminal 1{q <= theta} under
    the Beta-Bernoulli mixture law (:class:`BetaBernoulliLaw`); bounded by 1.
    """

    def fn(theta, n, path):
        if n > len(path):
            raise IndexError(f"need at least {n} path coordinates, got {len(path)}")
        ones = int(sum(itertools.islice(path, n)))
        t = float(theta[0])
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        return float(betainc(a + ones, b + n - ones, t))

    return MartingaleFamily(fn, theta_domain=((0.0, 1.0),), bound=1.0, name="bernoulli_posterior")


# Exact martingale check ------------------------------------------------------


@dataclass(frozen=True)
class MartingaleCheck:
    max_violation: float
    worst_node: tuple  # (n, prefix) for sequence laws, (n, block) for finite spaces
    nodes_checked: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_violation < self.tol


def check_martingale(family: MartingaleFamily, law, theta, n_max: int | None = None, tol: float = 1e-12) -> MartingaleCheck:
    """Verify E[X_{n+1} | F_n] = X_n exactly, node by node, for n < n_max.

    ``law`` is a :class:`FiniteSpace` (the family must carry a filtration) or
    a sequence law with ``alphabet`` and ``predictive(prefix)``, such as a
    :class:`ParametricModel` under theta0. Violations are reported, not raised.
    """
    if isinstance(law, FiniteSpace):
        return _check_on_space(family, law, theta, n_max, tol)
    if n_max is None:
        raise ValueError("n_max is required for sequence laws")
    theta = as_theta(theta)
    worst = (0.0, None)
    count = 0
    stack = [()]
    while stack:
        prefix = stack.pop()
        n = len(prefix)
        probs = law.predictive(prefix)
        parent = family.evaluate(theta, n, prefix)
        acc = 0.0
        for s, p in zip(law.alphabet, probs):
            if p > 0:
                child = prefix + (s,)
                acc += p * family.evaluate(theta, n + 1, child)
                if n + 1 < n_max:
                    stack.append(child)
        count += 1
        gap = abs(acc - parent)
        if gap > worst[0] or worst[1] is None:
            worst = (gap, (n, prefix))
    return MartingaleCheck(worst[0], worst[1], count, tol)


def _check_on_space(family, space, theta, n_max, tol) -> MartingaleCheck:
    if family.filtration is None:
        raise ValueError("family has no filtration to check against")
    levels = (trivial_partition(space.size),) + family.filtration.levels
    n_max = len(levels) - 1 if n_max is None else min(n_max, len(levels) - 1)
    w = space.weights
    worst, worst_node, count = 0.0, None, 0
    for n in range(n_max):
        child_vals = np.array([family.evaluate(theta, n + 1, i) for i in range(space.size)])
        for block in levels[n].blocks:
            idx = np.asarray(block)
            mass = w[idx].sum()
            if mass <= 0:
                continue
            gap = abs(float(w[idx] @ child_vals[idx]) / mass - family.evaluate(theta, n, block[0]))
            count += 1
            if gap > worst or worst_node is None:
                worst, worst_node = gap, (n, block)
    return MartingaleCheck(worst, worst_node, count, tol)


def exact_expectation(family: MartingaleFamily, model: ParametricModel, theta, n: int) -> float:
    """E_theta0[X_n^theta] by enumerating all length-``n`` paths."""
    p0 = dict(zip(model.alphabet, model.probs(model.theta0)))
    terms = []
    for path in itertools.product(model.alphabet, repeat=n):
        weight = math.prod(p0[s] for s in path)
        if weight > 0:
            terms.append(weight * family.evaluate(theta, n, path))
    return math.fsum(terms)


# Uniform convergence ---------------------------------------------------------


@dataclass(frozen=True)
class UniformConvergenceTable:
    """Per-n statistics of sup_theta |X_n^theta - X_ref^theta|.

    ``X_ref`` is the value at ``n_ref``, a proxy for the unobservable limit.
    ``l1`` estimates sup_theta E|X_n^theta - X_ref^theta| by the replicate mean.
    """

    n_values: tuple[int, ...]
    n_ref: int
    mean_sup: tuple[float, ...]
    max_sup: tuple[float, ...]
    l1: tuple[float, ...]
    grid_size: int
    replicates: int
    limit_proxy: str = "value at n_ref"

    def rows(self):
        return list(zip(self.n_values, self.mean_sup, self.max_sup, self.l1))


def uniform_convergence_diag(
    family: MartingaleFamily,
    theta_values: Sequence,
    sampler: Callable[[np.random.Generator, int], Sequence],
    n_list: Sequence[int],
    replicates: int,
    seed: int,
    *,
    n_ref: int | None = None,
    check_bound: bool = True,
) -> UniformConvergenceTable:
    """Monte Carlo estimate of how fast a family converges uniformly over a grid.

    ``sampler(rng, length)`` draws one path. Replicate ``r`` uses a stream
    derived from ``(seed, r)`` only.
    """
    if check_bound and family.bound is None:
        raise ValueError(f"{family.name} declares no bound; pass check_bound=False to skip")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    n_values = sorted({int(n) for n in n_list})
    if not n_values or n_values[0] < 0:
        raise ValueError("n_list must be nonempty and nonnegative")
    n_ref = n_values[-1] if n_ref is None else int(n_ref)
    if n_ref < n_values[-1]:
        raise ValueError("n_ref must be at least max(n_list)")
    grid = theta_grid(theta_values)

    dev = np.empty((replicates, len(n_values), grid.shape[0]))
    for r in range(replicates):
        path = sampler(replicate_rng(seed, r), n_ref)
        for g, theta in enumerate(grid):
            ref = family.evaluate(theta, n_ref, path)
            for j, n in enumerate(n_values):
                dev[r, j, g] = abs(family.evaluate(theta, n, path) - ref)
    sup = dev.max(axis=2)
    return UniformConvergenceTable(
        n_values=tuple(n_values),
        n_ref=n_ref,
        mean_sup=tuple(sup.mean(axis=0).tolist()),
        max_sup=tuple(sup.max(axis=0).tolist()),
        l1=tuple(dev.mean(axis=0).max(axis=1).tolist()),
        grid_size=grid.shape[0],
        replicates=replicates,
    )


def beta_bernoulli_sampler(a: float = 1.0, b: float = 1.0):
    law = BetaBernoulliLaw(a, b)
    return law.sample


def parametric_sampler(model: ParametricModel):
    return model.sample


# Point-mass example ----------------------------------------------------------


@dataclass(frozen=True)
class DiracDemo:
    depth: int
    entropy_value: float
    level_reports: tuple[EntropyReport, ...]
    martingale_table: tuple[tuple[float, int, float], ...]  # (theta, n, X_n along y)

    @property
    def constant_after_first(self) -> bool:
        by_theta: dict[float, list[float]] = {}
        for theta, n, v in self.martingale_table:
            if n >= 1:
                by_theta.setdefault(theta, []).append(v)
        return all(len(set(vs)) == 1 for vs in by_theta.values())


def dirac_space(depth: int):
    """{0,1}^depth with all mass on the all-ones sequence, and its filtration.

    Level n is generated by the sets {x : x_k = 1 for n <= k <= depth},
    k = 1..n; the limit is the join of all levels.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    paths = list(itertools.product((0, 1), repeat=depth))
    weights = np.zeros(len(paths))
    weights[-1] = 1.0  # product order puts (1, ..., 1) last
    space = FiniteSpace(weights, labels=paths)
    gens = [
        frozenset(i for i, x in enumerate(paths) if all(x[k - 1] == 1 for k in range(n, depth + 1)))
        for n in range(1, depth + 1)
    ]
    filtration = Filtration(refining_chain(space, gens)[1:])
    return space, filtration


def dirac_terminal(space: FiniteSpace):
    weights = np.array([sum(k * v for k, v in enumerate(x, start=1)) for x in space.labels], dtype=float)

    def terminal(theta):
        return np.sin(theta * (1.0 + weights))

    return terminal


def dirac_entropy_demo(depth: int = 5, thetas: Sequence[float] = (0.5, 1.0, 2.0)) -> DiracDemo:
    """Maximal conditional entropy and Doob martingales under a point mass."""
    space, filtration = dirac_space(depth)
    report = martin_condition_report(space, filtration, filtration.limit)
    family = doob_martingale(space, dirac_terminal(space), filtration, bound=1.0)
    y = space.labels[-1]
    table = tuple(
        (float(t), n, family.evaluate(t, n, y)) for t in thetas for n in range(len(filtration) + 1)
    )
    return DiracDemo(depth, report.reports[0].value, report.reports, table)


# Maximum-likelihood consistency ---------------------------------------------


@dataclass(frozen=True)
class ConsistencyReport:
    grid: np.ndarray  # (G, p)
    theta0: tuple[float, ...]
    n_values: tuple[int, ...]
    estimates: np.ndarray  # (replicates, len(n_values), p)
    log_sup_ratio: np.ndarray  # (replicates, len(n_values))
    success_fraction: float
    eps_ball: float
    tol: float
    grid_spacing: float  # caveat: maximization is over the grid only

    @property
    def deviation(self) -> np.ndarray:
        """|theta_hat_n - theta0| per (replicate, n)."""
        return np.linalg.norm(self.estimates - np.asarray(self.theta0), axis=2)

    @property
    def sup_ratio_outside_ball(self) -> np.ndarray:
        return np.exp(self.log_sup_ratio)

    def mean_sup_ratio(self, n: int) -> float:
        return float(self.sup_ratio_outside_ball[:, self.n_values.index(n)].mean())


def _grid_spacing(grid: np.ndarray) -> float:
    if grid.shape[0] < 2:
        return 0.0
    d = np.linalg.norm(grid[:, None, :] - grid[None, :, :], axis=2)
    return float(d[d > 0].min()) if np.any(d > 0) else 0.0


def _recorded(n_max: int, record) -> list[int]:
    if record is None:
        return list(range(1, n_max + 1))
    rec = sorted({int(n) for n in record if 1 <= int(n) <= n_max} | {n_max})
    return rec


def wald_mle_experiment(
    model: ParametricModel | GaussianFieldModel,
    theta_values: Sequence,
    eps_ball: float,
    n_max: int,
    replicates: int,
    seed: int,
    tol: float,
    record: Sequence[int] | None = None,
) -> ConsistencyReport:
    """Grid maximum-likelihood estimates along growing samples.

    theta_hat_n is the grid point of largest log-likelihood at level n (ties
    go to the smallest grid index). Alongside it the log of the largest
    likelihood ratio over grid points at distance >= ``eps_ball`` from theta0
    is tracked. ``record`` selects the levels kept (default: all).
    """
    grid = theta_grid(theta_values)
    theta0 = np.asarray(model.theta0)
    if grid.shape[1] != theta0.size:
        raise ValueError("grid dimension does not match theta0")
    if not in_domain(model.theta_domain, theta0):
        raise ValueError("theta0 lies outside the parameter domain")
    for t in grid:
        if not in_domain(model.theta_domain, t):
            raise ValueError(f"grid point {tuple(t)} lies outside the parameter domain")
    dist0 = np.linalg.norm(grid - theta0, axis=1)
    i0 = int(np.argmin(dist0))
    if dist0[i0] > 1e-12:
        raise ValueError("the grid must contain theta0")
    spacing = _grid_spacing(grid)
    if grid.shape[0] > 1 and not eps_ball > spacing:
        raise ValueError(f"eps_ball={eps_ball} must exceed the grid spacing {spacing}")
    if replicates < 1 or n_max < 1:
        raise ValueError("replicates and n_max must be >= 1")
    outside = dist0 >= eps_ball
    n_values = _recorded(n_max, record)

    if isinstance(model, GaussianFieldModel):
        loglik = _gaussian_loglik(model, grid, n_values, n_max, replicates, seed)
    else:
        loglik = _parametric_loglik(model, grid, n_values, n_max, replicates, seed)

    # loglik: (replicates, len(n_values), G)
    best = np.argmax(loglik, axis=2)
    estimates = grid[best]
    log_ratio = loglik - loglik[:, :, i0:i0 + 1]
    if np.any(outside):
        log_sup = log_ratio[:, :, outside].max(axis=2)
    else:
        log_sup = np.full(loglik.shape[:2], -np.inf)
    final = np.linalg.norm(estimates[:, -1, :] - theta0, axis=1)
    return ConsistencyReport(
        grid=grid,
        theta0=tuple(theta0.tolist()),
        n_values=tuple(n_values),
        estimates=estimates,
        log_sup_ratio=log_sup,
        success_fraction=float(np.mean(final < tol)),
        eps_ball=float(eps_ball),
        tol=float(tol),
        grid_spacing=spacing,
    )


def _parametric_loglik(model, grid, n_values, n_max, replicates, seed):
    model.validate(grid)
    logp = np.array([model.log_probs(t) for t in grid])  # (G, A)
    null = np.isneginf(logp)
    finite = np.where(null, 0.0, logp)
    rows = np.asarray(n_values) - 1
    out = np.empty((replicates, len(n_values), grid.shape[0]))
    k = len(model.alphabet)
    for r in range(replicates):
        idx = model.sample_indices(replicate_rng(seed, r), n_max)
        counts = np.cumsum(np.eye(k)[idx], axis=0)[rows]  # (len(n_values), A)
        ll = counts @ finite.T
        ll[(counts > 0).astype(float) @ null.T.astype(float) > 0] = -np.inf
        out[r] = ll
    return out


def _gaussian_loglik(model, grid, n_values, n_max, replicates, seed):
    if n_max > model.m:
        raise ValueError(f"n_max={n_max} exceeds the {model.m} available sites")
    if np.any(np.diag(model.covariance(model.theta0)) <= 0):
        raise DegenerateModelError("zero variance at some site under theta0")
    factors = {
        (g, n): (model.cholesky(t, n), model.mean_vector(t, n))
        for g, t in enumerate(grid)
        for n in n_values
    }
    out = np.empty((replicates, len(n_values), grid.shape[0]))
    for r in range(replicates):
        y = model.sample(replicate_rng(seed, r), n_max)
        for j, n in enumerate(n_values):
            for g in range(grid.shape[0]):
                chol, mu = factors[g, n]
                out[r, j, g] = _log_density(chol, mu, y[:n])
    return out
