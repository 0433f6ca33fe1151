"""
The package *locperc* compares local percolation models on :math:`\\mathbb{Z}^d` site by site.

In a local percolation model every site draws its set of outgoing nearest-neighbor
edges independently from a common *local law*. Whether one law makes the origin's
cluster reach distance ``n`` more easily than another can often be read off the
laws alone: if ``P[N(o) ∩ A ≠ ∅] <= Q[N(o) ∩ A ≠ ∅]`` for every set ``A`` of
directions, the one-arm probabilities compare the same way, for every ``n``.

The package provides

- the laws themselves and their hitting profiles (:mod:`locperc.local_laws`),
- mechanical checks of the local comparison conditions (:mod:`locperc.domination`),
- a seeded Monte Carlo estimator of one-arm probabilities (:mod:`locperc.monte_carlo`),
- an exact enumeration oracle for small balls (:mod:`locperc.exact_oracle`),
- and the command-line tool ``locperc`` (:mod:`locperc.cli`).
"""

__version__ = "0.1.0"


from .domination import (
    DominationReport,
    PairwiseReport,
    UnsupportedDimensionError,
    check_local_domination,
    check_pairwise_domination,
    check_sandwich,
    check_stochastic_domination,
    exchangeable_reduce,
    exchangeable_reduce_step,
    exchangeable_spread_step,
    f_concavity_check,
)
from .exact_oracle import (
    BudgetExceededError,
    HypothesisViolatedError,
    InterpolationSpec,
    OneArmOracle,
    PivotalCase,
    conditional_one_arm,
    exact_aon_site_check,
    exact_dir_undir_check,
    exact_one_arm,
    exact_one_arm_interpolated,
    pivotality_cases,
    verify_interpolation_monotonicity,
)
from .exploration import (
    DIRECTED,
    INTERSECTION,
    UNION,
    EdgeSemantics,
    ExplorationResult,
    Semantics,
    explore,
)
from .lattice import BallIndex, ResourceGuardError, ball, boundary, neighbors
from .local_laws import (
    DegreeDistribution,
    DomainError,
    HittingProfile,
    LocalLaw,
    NeighborMask,
    expected_degree,
    family,
    hitting_profile,
    is_exchangeable,
    make_aon,
    make_bond,
    make_corner_stick,
    make_dng,
    make_exchangeable,
    make_iid,
    make_soft_opposite,
    make_soft_perpendicular,
    mix_with_empty,
)
from .monte_carlo import (
    BracketError,
    DecayFit,
    Estimate,
    InsufficientDataError,
    estimate_one_arm,
    fit_decay,
    pseudo_critical,
    scan_parameter,
    survival_proxy,
)
from .thresholds import threshold_report
