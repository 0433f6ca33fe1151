from fractions import Fraction

import pytest

from locperc.exact_oracle import (
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
from locperc.exploration import DIRECTED, INTERSECTION, UNION, EdgeSemantics
from locperc.lattice import ball
from locperc.local_laws import DomainError, make_aon, make_bond, make_dng, make_iid
from locperc.monte_carlo import estimate_one_arm

HALF = Fraction(1, 2)


def test_closed_form():
    # d = 1, n = 1: 1 - (1 - p^2)^2
    assert exact_one_arm(make_iid(1, 0.5), 1, 1) == pytest.approx(0.4375, abs=1e-12)
    value = exact_one_arm(make_iid(1, HALF, exact=True), 1, 1)
    assert value == Fraction(7, 16)

    oracle = OneArmOracle(1, 1, DIRECTED, [make_iid(1, 0.5)])
    print(oracle)
    assert oracle.configurations == 64
    assert oracle.points() == [(-1,), (0,), (1,)]


def test_radius_zero():
    for p in (0.2, 0.5):
        value = exact_one_arm(make_iid(2, p), 2, 0)
        assert value == pytest.approx(1 - (1 - p) ** 4, abs=1e-12)
    law = make_iid(1, HALF, exact=True)
    assert exact_one_arm(law, 1, 0, INTERSECTION) == Fraction(7, 16)
    assert exact_one_arm(law, 1, 0, UNION) == Fraction(15, 16)


def test_site_semantics():
    # The origin and one of its neighbors must be open.
    for p in (0.3, 0.5):
        value = exact_one_arm(None, 1, 0, EdgeSemantics.site(p))
        assert value == pytest.approx(p * (1 - (1 - p) ** 2), abs=1e-12)
    assert exact_one_arm(None, 2, 1, EdgeSemantics.site(1.0)) == pytest.approx(1)


def test_budget():
    with pytest.raises(BudgetExceededError):
        exact_one_arm(make_iid(2, 0.5), 2, 2)
    with pytest.raises(BudgetExceededError):
        exact_one_arm(make_iid(1, 0.5), 1, 2, budget=100)
    with pytest.raises(DomainError):
        OneArmOracle(2, 1, UNION, [])


def test_workers():
    law = make_dng(2, 0.5)
    value = OneArmOracle(2, 1, DIRECTED, [law]).value(law)
    assert OneArmOracle(2, 1, DIRECTED, [law], workers=3).value(law) == value
    for workers in (0, 257):
        with pytest.raises(DomainError, match="workers"):
            OneArmOracle(2, 1, DIRECTED, [law], workers=workers)


def test_agrees_with_monte_carlo():
    law = make_dng(2, 0.5)
    exact = exact_one_arm(law, 2, 1)
    est = estimate_one_arm(law, 2, 1, DIRECTED, 20_000, seed=5)
    print(exact, est)
    assert abs(exact - est.p_hat) <= 4 * est.stderr + 1e-3


def test_dir_undir():
    a, b = exact_dir_undir_check(0.3, 2, 1)
    assert a == pytest.approx(b, rel=1e-12)
    a, b = exact_dir_undir_check(HALF, 1, 2)
    assert a == b
    a, b = exact_dir_undir_check(0.4, 3, 0)
    assert a == pytest.approx(1 - 0.6**6)
    assert b == pytest.approx(a)


def test_aon_site():
    a, b = exact_aon_site_check(0.5, 1, 0)
    assert a == pytest.approx(0.375)
    assert b == pytest.approx(0.375)
    a, b = exact_aon_site_check(0.3, 2, 1)
    assert a == pytest.approx(b, rel=1e-12)
    a, b = exact_aon_site_check(1.0, 2, 1)
    assert a == pytest.approx(1) and b == pytest.approx(1)


def test_interpolation_endpoints():
    P, Q = make_iid(1, HALF, exact=True), make_dng(1, HALF, exact=True)
    everything = ball(1, 1).ball_points()
    lo = exact_one_arm_interpolated(InterpolationSpec(P, Q, frozenset(), 1, 1))
    hi = exact_one_arm_interpolated(InterpolationSpec(P, Q, frozenset(everything), 1, 1))
    assert lo == exact_one_arm(P, 1, 1) == Fraction(7, 16)
    assert hi == exact_one_arm(Q, 1, 1) == HALF
    mid = exact_one_arm_interpolated(InterpolationSpec(P, Q, {(0,)}, 1, 1))
    assert lo <= mid <= hi

    with pytest.raises(DomainError):
        InterpolationSpec(P, Q, {(3,)}, 1, 1)
    with pytest.raises(DomainError):
        InterpolationSpec(P, make_iid(2, 0.5), set(), 1, 1)


def test_verify_interpolation():
    P, Q = make_iid(1, HALF, exact=True), make_dng(1, HALF, exact=True)
    res = verify_interpolation_monotonicity(P, Q, 1, 1, tol=0)
    assert res.holds
    assert res.exhaustive
    assert res.pairs_checked == 12
    assert res.to_dict()["counterexample"] is None

    res = verify_interpolation_monotonicity(make_iid(2, 0.5), make_dng(2, 0.5), 2, 1)
    assert res.holds
    assert res.pairs_checked == 80

    res = verify_interpolation_monotonicity(
        make_iid(2, 0.5), make_dng(2, 0.5), 2, 1, max_exhaustive_sites=3, chains=4
    )
    assert res.holds and not res.exhaustive
    assert res.pairs_checked == 20

    with pytest.raises(HypothesisViolatedError):
        verify_interpolation_monotonicity(make_dng(2, 0.5), make_iid(2, 0.5), 2, 1)
    with pytest.raises(DomainError):
        verify_interpolation_monotonicity(P, Q, 1, 1, UNION)


def test_conditional_one_arm():
    P, Q = make_iid(1, HALF, exact=True), make_dng(1, HALF, exact=True)
    for U in (set(), {(0,)}, {(-1,), (1,)}):
        spec = InterpolationSpec(P, Q, U, 1, 1)
        expected = exact_one_arm_interpolated(spec)
        for a in ((0,), (1,), (-1,)):
            assert conditional_one_arm(spec, a) == expected


def test_pivotality():
    res = pivotality_cases({}, (0,), 1, 1)
    assert res.case is PivotalCase.BLOCKED

    res = pivotality_cases({(1,): 1}, (0,), 1, 1)
    assert res.case is PivotalCase.PIVOTAL
    assert res.mask == 1

    res = pivotality_cases({(0,): 1, (1,): 1}, (-1,), 1, 1)
    assert res.case is PivotalCase.CONNECTED

    # Both sides lead out.
    res = pivotality_cases({(1,): 1, (-1,): 2}, (0,), 1, 1)
    assert res.case is PivotalCase.PIVOTAL
    assert res.mask == 1 | 2

    with pytest.raises(DomainError):
        pivotality_cases({}, (2,), 1, 1)
    with pytest.raises(DomainError):
        pivotality_cases({(1,): 4}, (0,), 1, 1)


def test_iid_below_dng_on_a_line():
    for n, exact in ((1, True), (2, True), (3, False)):
        p = Fraction(2, 5) if exact else 0.4
        P, Q = make_iid(1, p, exact=exact), make_dng(1, p, exact=exact)
        res = verify_interpolation_monotonicity(P, Q, 1, n, tol=0 if exact else 1e-12)
        assert res.holds and res.exhaustive
        assert res.pairs_checked == (2 * n + 1) * 2 ** (2 * n)
        assert exact_one_arm(P, 1, n) <= exact_one_arm(Q, 1, n) + (0 if exact else 1e-12)

    res = verify_interpolation_monotonicity(make_iid(2, 0.5), make_dng(2, 0.5), 2, 1, tol=1e-12)
    assert res.holds
    assert exact_one_arm(make_iid(2, 0.5), 2, 1) <= exact_one_arm(make_dng(2, 0.5), 2, 1)


def test_identity_grid():
    grid = [(1, n, p) for n in (0, 1, 2) for p in (0.3, 0.5, 0.7)]
    grid += [(2, n, p) for n in (0, 1) for p in (0.3, 0.5)]
    for d, n, p in grid:
        a, b = exact_dir_undir_check(p, d, n)
        assert a == pytest.approx(b, abs=1e-12), (d, n, p)
        a, b = exact_aon_site_check(p, d, n)
        assert a == pytest.approx(b, abs=1e-12), (d, n, p)


def test_identities_by_monte_carlo():
    samples = 100_000
    for p in (0.3, 0.5):
        pairs = [
            (
                estimate_one_arm(make_iid(2, p), 2, 8, DIRECTED, samples, seed=1),
                estimate_one_arm(make_bond(2, p), 2, 8, UNION, samples, seed=2),
            ),
            (
                estimate_one_arm(make_aon(2, p), 2, 9, DIRECTED, samples, seed=3),
                estimate_one_arm(None, 2, 8, EdgeSemantics.site(p), samples, seed=4),
            ),
        ]
        for a, b in pairs:
            print(a)
            print(b)
            assert abs(a.p_hat - b.p_hat) <= 3 * (a.stderr**2 + b.stderr**2) ** 0.5
