import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condent.martingale import (
    BoundViolation,
    MartingaleFamily,
    bernoulli_posterior_family,
    beta_bernoulli_sampler,
    check_martingale,
    dirac_entropy_demo,
    dirac_space,
    doob_martingale,
    exact_expectation,
    likelihood_ratio_family,
    log_likelihood_ratio,
    uniform_convergence_diag,
    wald_mle_experiment,
)
from condent.models import (
    AbsoluteContinuityError,
    BetaBernoulliLaw,
    ParametricModel,
    bernoulli_model,
    exponential_field,
    tilted_model,
)
from condent.partition import Filtration, Partition, point_partition, trivial_partition
from condent.space import FiniteSpace, uniform_space
from oracles import random_filtration

HALVES = Partition([[0, 1], [2, 3]])
LADDER = Filtration([trivial_partition(4), HALVES, point_partition(4)])


# Doob martingales ------------------------------------------------------------


def test_doob_indicator_example():
    fam = doob_martingale(uniform_space(4), [1.0, 0.0, 0.0, 0.0], LADDER, bound=1.0)
    assert [fam(0.0, n, 0) for n in range(4)] == [0.25, 0.25, 0.5, 1.0]
    assert [fam(0.0, n, 3) for n in range(4)] == [0.25, 0.25, 0.0, 0.0]


def test_doob_constant_and_last_level():
    fam = doob_martingale(uniform_space(4), [2.5] * 4, LADDER)
    assert all(fam(0.0, n, p) == 2.5 for n in range(4) for p in range(4))
    terminal = np.array([0.1, -0.4, 0.9, 0.3])
    fam = doob_martingale(uniform_space(4), terminal, LADDER)
    assert [fam(0.0, 3, p) for p in range(4)] == terminal.tolist()


def test_doob_rejects_bound_violation_and_bad_level():
    with pytest.raises(ValueError):
        doob_martingale(uniform_space(4), [2.0, 0, 0, 0], LADDER, bound=1.0)
    fam = doob_martingale(uniform_space(4), [1.0, 0, 0, 0], LADDER)
    with pytest.raises(IndexError):
        fam(0.0, 4, 0)


def test_doob_accepts_labels():
    s = FiniteSpace([0.25] * 4, labels=[(0, 0), (0, 1), (1, 0), (1, 1)])
    fam = doob_martingale(s, lambda t: np.array([t, 0.0, 0.0, 0.0]), LADDER)
    assert fam(0.8, 2, (0, 0)) == pytest.approx(0.4)


@pytest.mark.parametrize("seed", range(30))
def test_doob_is_martingale(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    s = FiniteSpace(rng.dirichlet(np.ones(n)))
    f = random_filtration(rng, n, depth=int(rng.integers(1, 8)))
    fam = doob_martingale(s, lambda t: np.sin(t * np.arange(1, n + 1)), f, bound=1.0)
    for theta in (0.3, 1.7):
        assert check_martingale(fam, s, theta, tol=1e-12).passed


def test_corrupted_doob_is_detected():
    s = uniform_space(4)
    fam = doob_martingale(s, [1.0, 0.0, 0.0, 0.0], LADDER)

    def corrupted(theta, n, path):
        value = fam.fn(theta, n, path)
        return value + 0.1 if (n, path) == (2, 0) else value

    bad = MartingaleFamily(corrupted, space=s, filtration=LADDER)
    report = check_martingale(bad, s, 0.0)
    assert not report.passed
    assert abs(report.max_violation - 0.1) < 1e-12


# Likelihood ratios -----------------------------------------------------------


def test_likelihood_ratio_examples():
    fam = likelihood_ratio_family(bernoulli_model(0.5))
    assert fam(0.6, 2, (1, 0)) == pytest.approx(0.96, abs=1e-15)
    assert all(fam(0.5, n, p) == 1.0 for n in range(4) for p in itertools.product((0, 1), repeat=3))
    assert fam(0.9, 0, ()) == 1.0


def test_likelihood_ratio_needs_enough_coordinates():
    with pytest.raises(IndexError):
        likelihood_ratio_family(bernoulli_model(0.5))(0.6, 3, (1, 0))


def test_likelihood_ratio_zero_under_theta():
    assert likelihood_ratio_family(bernoulli_model(0.5))(1.0, 2, (0, 1)) == 0.0


def test_absolute_continuity_violation_on_path():
    def pmf(theta, s):
        return [1.0 - theta, theta, 0.0][s] if theta <= 0.5 else [0.25, 0.25, 0.5][s]

    model = ParametricModel((0, 1, 2), pmf, 0.3, [(0.0, 1.0)])
    with pytest.raises(AbsoluteContinuityError):
        log_likelihood_ratio(model, 0.8, 2, (0, 2))


@pytest.mark.parametrize(
    "model, thetas",
    [
        (bernoulli_model(0.5), np.linspace(0.05, 0.95, 7)),
        (tilted_model(3, 0.0), np.linspace(-1, 1, 5)),
        (tilted_model(4, 0.0), np.linspace(-1, 1, 5)),
    ],
    ids=["bernoulli", "tilted3", "tilted4"],
)
def test_likelihood_ratio_identities(model, thetas):
    fam = likelihood_ratio_family(model)
    depth = 8 if len(model.alphabet) <= 3 else 6
    for theta in thetas:
        assert check_martingale(fam, model, theta, n_max=depth).passed
        assert abs(exact_expectation(fam, model, theta, depth) - 1.0) < 1e-12


def test_corrupted_sequence_family_is_detected():
    model = bernoulli_model(0.5)
    base = likelihood_ratio_family(model)

    def corrupted(theta, n, path):
        value = base.fn(theta, n, path)
        return value + 0.1 if tuple(path[:n]) == (1, 1) else value

    report = check_martingale(MartingaleFamily(corrupted), model, 0.7, n_max=4)
    assert abs(report.max_violation - 0.1) < 1e-12


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-2.5, 2.5),
    st.integers(0, 6),
    st.lists(st.integers(0, 3), min_size=6, max_size=6),
    st.lists(st.integers(0, 3), min_size=6, max_size=6),
)
def test_adaptedness(theta, n, path, noise):
    fam = likelihood_ratio_family(tilted_model(4, 0.0))
    scrambled = tuple(path[:n]) + tuple(noise[n:])
    assert fam(theta, n, tuple(path)) == fam(theta, n, scrambled)
    post = bernoulli_posterior_family()
    bits, noise_bits = [p % 2 for p in path], [v % 2 for v in noise]
    t = min(max((theta + 2.5) / 5.0, 0.0), 1.0)
    assert post(t, n, bits) == post(t, n, bits[:n] + noise_bits[n:])


# Bounded families ------------------------------------------------------------


def test_bound_enforced():
    fam = MartingaleFamily(lambda t, n, p: 2.0 * float(t[0]), bound=1.0, name="scaled")
    assert fam(0.5, 0, ()) == 1.0
    with pytest.raises(BoundViolation, match="exceeds bound"):
        fam(0.6, 0, ())


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.lists(st.integers(0, 1), max_size=30))
def test_posterior_family_stays_in_bounds(theta, path):
    fam = bernoulli_posterior_family()
    for n in range(len(path) + 1):
        assert 0.0 <= fam(theta, n, path) <= 1.0


def test_posterior_family_is_martingale_under_mixture():
    fam = bernoulli_posterior_family(2.0, 3.0)
    for theta in (0.1, 0.5, 0.8):
        assert check_martingale(fam, BetaBernoulliLaw(2.0, 3.0), theta, n_max=8).passed


# Uniform convergence ---------------------------------------------------------


def test_uniform_convergence_posterior_family():
    table = uniform_convergence_diag(
        bernoulli_posterior_family(),
        np.linspace(0, 1, 11),
        beta_bernoulli_sampler(),
        n_list=[1, 5, 10, 25, 50, 100],
        replicates=200,
        seed=11,
    )
    assert all(a >= b for a, b in zip(table.mean_sup, table.mean_sup[1:]))
    assert table.n_ref == 100
    assert table.mean_sup[-1] < 0.05
    assert all(v >= 0 for v in table.max_sup + table.l1)
    again = uniform_convergence_diag(
        bernoulli_posterior_family(), np.linspace(0, 1, 11), beta_bernoulli_sampler(),
        [1, 5, 10, 25, 50, 100], 200, 11,
    )
    assert again == table


def test_uniform_convergence_requires_bound():
    with pytest.raises(ValueError, match="no bound"):
        uniform_convergence_diag(
            likelihood_ratio_family(bernoulli_model(0.5)), [0.5], bernoulli_model(0.5).sample, [1], 1, 0
        )


def test_uniform_convergence_zero_at_reference_level():
    s = uniform_space(4)
    fam = doob_martingale(s, lambda t: np.array([t, 0.0, 1.0, 0.5]), LADDER, bound=1.0)
    table = uniform_convergence_diag(
        fam, [0.0, 0.5, 1.0], lambda rng, n: int(rng.integers(0, 4)), [1, 2, 3], 20, 3
    )
    assert table.mean_sup[-1] == 0.0 and table.max_sup[-1] == 0.0


# Point-mass example ----------------------------------------------------------


@pytest.mark.parametrize("depth", range(1, 9))
def test_dirac_demo(depth):
    demo = dirac_entropy_demo(depth)
    assert demo.entropy_value == 0.0
    assert all(r.value == 0.0 for r in demo.level_reports)
    assert demo.constant_after_first


def test_dirac_uniform_convergence_is_zero():
    space, filtration = dirac_space(4)
    fam = doob_martingale(space, lambda t: np.cos(t * np.arange(space.size)), filtration, bound=1.0)
    y = space.size - 1
    table = uniform_convergence_diag(fam, [0.5, 1.0, 2.0], lambda rng, n: y, [1, 2, 3, 4], 5, 0)
    assert table.mean_sup == (0.0, 0.0, 0.0, 0.0)


def test_dirac_space_is_point_mass():
    space, filtration = dirac_space(3)
    assert space.weights[-1] == 1.0 and space.labels[-1] == (1, 1, 1)
    assert len(filtration) == 3


# Maximum-likelihood consistency ---------------------------------------------


def test_wald_forced_argmax_and_determinism():
    model = bernoulli_model(0.6)
    report = wald_mle_experiment(model, [0.6], 0.1, 50, 3, seed=5, tol=0.05)
    assert np.all(report.estimates == 0.6)
    assert report.success_fraction == 1.0
    a = wald_mle_experiment(model, np.round(np.arange(0.1, 1.0, 0.1), 10), 0.15, 200, 1, seed=5, tol=0.05)
    b = wald_mle_experiment(model, np.round(np.arange(0.1, 1.0, 0.1), 10), 0.15, 200, 1, seed=5, tol=0.05)
    assert np.array_equal(a.estimates, b.estimates)
    assert np.array_equal(a.log_sup_ratio, b.log_sup_ratio)


def test_wald_estimates_in_domain():
    grid = np.round(np.arange(0.1, 1.0, 0.1), 10)
    report = wald_mle_experiment(bernoulli_model(0.6), grid, 0.15, 300, 10, seed=1, tol=0.05, record=[10, 100])
    assert report.n_values == (10, 100, 300)
    assert np.all((report.estimates >= 0) & (report.estimates <= 1))
    assert 0.0 <= report.success_fraction <= 1.0


@pytest.mark.parametrize(
    "grid, eps",
    [([0.1, 0.5, 0.9], 0.5), ([0.1, 0.2, 0.6], 0.05), ([0.6, 1.5], 0.5)],
    ids=["missing-theta0", "eps-below-spacing", "outside-domain"],
)
def test_wald_input_checks(grid, eps):
    with pytest.raises(ValueError):
        wald_mle_experiment(bernoulli_model(0.6), grid, eps, 10, 1, 0, 0.05)


def test_wald_gaussian_field_small():
    model = exponential_field()
    report = wald_mle_experiment(model, [-3.0, 0.0, 3.0], 3.5, 5, 20, seed=4, tol=0.5)
    assert report.estimates.shape == (20, 5, 1)
    assert np.all(report.log_sup_ratio[:, :] < np.inf)
