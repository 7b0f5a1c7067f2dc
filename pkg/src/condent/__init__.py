"""Computable conditional entropy, partition lattices and martingale families
on finite and truncated countable probability spaces."""

__version__ = "0.1.0"

from condent.approximation import (
    ApproximationResult,
    best_approximation,
    uniform_level,
    worst_case_error,
)
from condent.entropy import (
    EntropyReport,
    TruncatedCountableModel,
    cond_entropy,
    entropy_limit_diagnostic,
    martin_condition_report,
    max_cond_entropy,
)
from condent.martingale import (
    ConsistencyReport,
    MartingaleFamily,
    check_martingale,
    dirac_entropy_demo,
    doob_martingale,
    likelihood_ratio_family,
    uniform_convergence_diag,
    wald_mle_experiment,
)
from condent.models import GaussianFieldModel, ParametricModel, gaussian_field_log_density
from condent.partition import (
    Filtration,
    Partition,
    atoms_from_generators,
    count_partitions,
    extend_with_complement,
    join,
    meet,
    point_partition,
    refines,
    refining_chain,
    separates_points,
    trivial_partition,
)
from condent.space import Event, FiniteSpace, cond_prob, make_space, prob, sym_diff

__all__ = [
    "ApproximationResult", "ConsistencyReport", "EntropyReport", "Event", "Filtration",
    "FiniteSpace", "GaussianFieldModel", "MartingaleFamily", "ParametricModel", "Partition",
    "TruncatedCountableModel", "atoms_from_generators", "best_approximation",
    "check_martingale", "cond_entropy", "cond_prob", "count_partitions", "dirac_entropy_demo",
    "doob_martingale", "entropy_limit_diagnostic", "extend_with_complement",
    "gaussian_field_log_density", "join", "likelihood_ratio_family", "make_space",
    "martin_condition_report", "max_cond_entropy", "meet", "point_partition", "prob",
    "refines", "refining_chain", "separates_points", "sym_diff", "trivial_partition",
    "uniform_convergence_diag", "uniform_level", "wald_mle_experiment", "worst_case_error",
]
