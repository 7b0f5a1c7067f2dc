"""Parametric laws for coordinate sequences and finite-site Gaussian fields."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

LOG_2PI = math.log(2.0 * math.pi)
JITTER = (1e-10, 1e-8)


class DegenerateModelError(ValueError):
    pass


class AbsoluteContinuityError(ValueError):
    pass


class FactorizationError(np.linalg.LinAlgError):
    def __init__(self, theta, n):
        super().__init__(f"covariance not positive definite after jitter (theta={theta}, n={n})")
        self.theta = theta
        self.n = n


def as_theta(theta) -> np.ndarray:
    if isinstance(theta, np.ndarray) and theta.ndim == 1 and theta.dtype == np.float64:
        return theta
    return np.atleast_1d(np.asarray(theta, dtype=np.float64))


def theta_key(theta) -> tuple[float, ...]:
    return tuple(as_theta(theta).tolist())


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Counter-based stream determined only by ``(seed, replicate)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(replicate,))))


def _box(domain) -> tuple[tuple[float, float], ...] | None:
    if domain is None:
        return None
    domain = np.asarray(domain, dtype=np.float64).reshape(-1, 2)
    if np.any(domain[:, 0] >= domain[:, 1]):
        raise ValueError("theta domain needs a_j < b_j")
    return tuple(map(tuple, domain.tolist()))


def in_domain(domain, theta, tol: float = 1e-12) -> bool:
    if domain is None:
        return True
    t = as_theta(theta)
    box = np.asarray(domain)
    return bool(t.size == len(box) and np.all(t >= box[:, 0] - tol) and np.all(t <= box[:, 1] + tol))


@dataclass(frozen=True, eq=False)
class ParametricModel:
    """Product law on sequences over a finite alphabet.

    Each coordinate is drawn from ``pmf(theta, symbol)``; ``theta0`` is the
    true parameter.
    """

    alphabet: tuple
    pmf: Callable
    theta0: tuple[float, ...]
    theta_domain: tuple[tuple[float, float], ...] | None = None
    name: str = "parametric"
    _index: dict = field(init=False, repr=False)
    _p0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "theta0", theta_key(self.theta0))
        object.__setattr__(self, "theta_domain", _box(self.theta_domain))
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.alphabet)})
        if len(self._index) != len(self.alphabet):
            raise ValueError("alphabet symbols must be distinct")
        p0 = self.probs(self.theta0)
        p0.setflags(write=False)
        object.__setattr__(self, "_p0", p0)
        self.validate([self.theta0])

    def probs(self, theta) -> np.ndarray:
        t = as_theta(theta)
        arg = float(t[0]) if t.size == 1 else t
        return np.array([self.pmf(arg, s) for s in self.alphabet], dtype=np.float64)

    def log_probs(self, theta) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs(theta))

    def validate(self, thetas) -> None:
        """Check normalization and absolute continuity w.r.t. ``theta0``."""
        p0 = self._p0
        for theta in thetas:
            p = self.probs(theta)
            if np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-12:
                raise ValueError(f"pmf at theta={theta_key(theta)} is not a distribution")
            bad = (p > 0) & (p0 == 0)
            if np.any(bad):
                sym = self.alphabet[int(np.flatnonzero(bad)[0])]
                raise AbsoluteContinuityError(
                    f"symbol {sym!r} has probability 0 under theta0 but not under {theta_key(theta)}"
                )

    def index(self, symbol) -> int:
        return self._index[symbol]

    def predictive(self, prefix) -> np.ndarray:
        """Next-symbol probabilities under theta0 (independent of the prefix)."""
        return self._p0

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(len(self.alphabet), size=n, p=self._p0)

    def sample(self, rng: np.random.Generator, n: int) -> tuple:
        return tuple(self.alphabet[i] for i in self.sample_indices(rng, n))


def _bernoulli_pmf(theta, s):
    return theta if s == 1 else 1.0 - theta


def bernoulli_model(theta0: float) -> ParametricModel:
    return ParametricModel((0, 1), _bernoulli_pmf, theta0, [(0.0, 1.0)], name="bernoulli")


def tilted_model(k: int, theta0: float, bound: float = 3.0) -> ParametricModel:
    """Exponential tilt on {0, ..., k-1}: pmf proportional to exp(theta * s)."""

    def pmf(theta, s):
        z = np.exp(theta * np.arange(k))
        return float(z[s] / z.sum())

    return ParametricModel(range(k), pmf, theta0, [(-bound, bound)], name=f"tilted{k}")


@dataclass(frozen=True)
class BetaBernoulliLaw:
    """Bernoulli sequence whose success rate is drawn from Beta(a, b)."""

    a: float = 1.0
    b: float = 1.0
    alphabet: tuple = (0, 1)

    def predictive(self, prefix) -> np.ndarray:
        ones = sum(prefix)
        p1 = (self.a + ones) / (self.a + self.b + len(prefix))
        return np.array([1.0 - p1, p1])

    def sample(self, rng: np.random.Generator, n: int) -> tuple:
        q = rng.beta(self.a, self.b)
        return tuple(int(v) for v in rng.random(n) < q)


# Gaussian fields -------------------------------------------------------------


def van_der_corput(m: int, base: int = 2) -> np.ndarray:
    """First ``m`` points of the van der Corput sequence, dense in [0, 1]."""
    out = np.empty(m)
    for i in range(m):
        k, denom, x = i + 1, 1.0, 0.0
        while k:
            k, digit = divmod(k, base)
            denom *= base
            x += digit / denom
        out[i] = x
    return out


@dataclass(frozen=True, eq=False)
class GaussianFieldModel:
    """Gaussian field observed at a leading subset of finitely many sites.

    ``kernel(theta, s, t)`` and ``mean(theta, s)`` take sites as 1-d arrays.
    """

    sites: np.ndarray
    kernel: Callable
    mean: Callable
    theta0: tuple[float, ...]
    theta_domain: tuple[tuple[float, float], ...] | None = None
    name: str = "gaussian_field"

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=np.float64)
        if sites.ndim == 1:
            sites = sites[:, None]
        sites.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "theta0", theta_key(self.theta0))
        object.__setattr__(self, "theta_domain", _box(self.theta_domain))

    @property
    def m(self) -> int:
        return self.sites.shape[0]

    def _arg(self, theta):
        t = as_theta(theta)
        return float(t[0]) if t.size == 1 else t

    def covariance(self, theta, n: int | None = None) -> np.ndarray:
        n = self.m if n is None else n
        arg = self._arg(theta)
        s = self.sites[:n]
        return np.array([[self.kernel(arg, s[i], s[j]) for j in range(n)] for i in range(n)])

    def mean_vector(self, theta, n: int | None = None) -> np.ndarray:
        n = self.m if n is None else n
        arg = self._arg(theta)
        return np.array([self.mean(arg, s) for s in self.sites[:n]], dtype=np.float64)

    def cholesky(self, theta, n: int | None = None) -> np.ndarray:
        """Lower Cholesky factor of the jittered leading covariance."""
        n = self.m if n is None else n
        if not 1 <= n <= self.m:
            raise ValueError(f"n must lie in 1..{self.m}")
        cov = self.covariance(theta, n)
        scale = float(np.mean(np.diag(cov)))
        if not np.all(np.isfinite(cov)) or scale <= 0:
            raise FactorizationError(theta_key(theta), n)
        for jitter in JITTER:
            try:
                return np.linalg.cholesky(cov + jitter * scale * np.eye(n))
            except np.linalg.LinAlgError:
                continue
        raise FactorizationError(theta_key(theta), n)

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        n = self.m if n is None else n
        chol = self.cholesky(self.theta0, n)
        return self.mean_vector(self.theta0, n) + chol @ rng.standard_normal(n)


def _log_density(chol: np.ndarray, mu: np.ndarray, y: np.ndarray) -> float:
    z = solve_triangular(chol, y - mu, lower=True)
    n = y.size
    return -0.5 * (n * LOG_2PI + float(z @ z)) - float(np.sum(np.log(np.diag(chol))))


def gaussian_field_log_density(model: GaussianFieldModel, theta, y, n: int) -> float:
    """log f_n^theta(y_1, ..., y_n) for the leading ``n`` sites."""
    y = np.asarray(y, dtype=np.float64)[:n]
    if y.size != n:
        raise ValueError(f"need {n} observations, got {y.size}")
    return _log_density(model.cholesky(theta, n), model.mean_vector(theta, n), y)


def gaussian_field_log_lr(model: GaussianFieldModel, theta, y, n: int) -> float:
    """log L_n^theta = log f_n^theta - log f_n^theta0."""
    if theta_key(theta) == model.theta0:
        return 0.0
    return gaussian_field_log_density(model, theta, y, n) - gaussian_field_log_density(
        model, model.theta0, y, n
    )


def exponential_field(
    m: int = 5, length_scale: float = 0.3, log_variance0: float = 0.0, bound: float = 10.0
) -> GaussianFieldModel:
    """Zero-mean field on [0, 1] with kernel exp(theta) * exp(-|s - t| / length_scale).

    The parameter is the log-variance. Sites follow the van der Corput order.
    """

    def kernel(theta, s, t):
        return math.exp(theta) * math.exp(-float(np.abs(s - t).sum()) / length_scale)

    return GaussianFieldModel(
        sites=van_der_corput(m),
        kernel=kernel,
        mean=lambda theta, s: 0.0,
        theta0=log_variance0,
        theta_domain=[(-bound, bound)],
        name="exponential_field",
    )


def theta_grid(values: Sequence) -> np.ndarray:
    """Normalize a grid to shape (G, p)."""
    grid = np.asarray(values, dtype=np.float64)
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.ndim != 2 or grid.shape[0] == 0:
        raise ValueError("theta grid must be a nonempty list of parameter values")
    return grid
