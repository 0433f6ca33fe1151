import math

import pytest

from locperc import __version__
from locperc.exploration import DIRECTED, UNION, EdgeSemantics
from locperc.domination import check_local_domination
from locperc.exact_oracle import exact_one_arm
from locperc.local_laws import DomainError, family, make_aon, make_dng, make_iid
from locperc.monte_carlo import (
    ESTIMATE_COLUMNS,
    BracketError,
    InsufficientDataError,
    estimate_one_arm,
    fit_decay,
    pseudo_critical,
    scan_parameter,
    survival_proxy,
    wilson_interval,
)


def test_wilson():
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-3)
    assert hi == pytest.approx(0.5962, abs=1e-3)
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert hi == 1 and 0.95 < lo < 1


def test_estimate_closed_form():
    # d = 1, n = 1: 1 - (1 - p^2)^2
    est = estimate_one_arm(make_iid(1, 0.5), 1, 1, DIRECTED, 20_000, seed=7)
    print(est)
    assert est.p_hat == pytest.approx(0.4375, abs=0.02)
    assert est.ci_low <= est.p_hat <= est.ci_high
    assert est.stderr == pytest.approx(math.sqrt(est.p_hat * (1 - est.p_hat) / 20_000))
    assert est.model == "iid(0.5)"
    assert est.semantics == "directed"

    est = estimate_one_arm(make_dng(1, 0.5), 1, 1, DIRECTED, 20_000, seed=7)
    assert est.p_hat == pytest.approx(0.5, abs=0.02)


def test_reproducible():
    law = make_dng(2, 0.5)
    a = estimate_one_arm(law, 2, 16, DIRECTED, 4000, seed=7)
    b = estimate_one_arm(law, 2, 16, DIRECTED, 4000, seed=7)
    c = estimate_one_arm(law, 2, 16, DIRECTED, 4000, seed=7, workers=3)
    d = estimate_one_arm(law, 2, 16, DIRECTED, 4000, seed=7, reverse=True)
    assert a == b == c
    assert d.successes == a.successes
    e = estimate_one_arm(law, 2, 16, DIRECTED, 4000, seed=8)
    assert e.seed == 8


def test_row():
    est = estimate_one_arm(None, 2, 3, EdgeSemantics.site(0.7), 500, seed=1)
    row = est.as_row()
    assert tuple(row) == ESTIMATE_COLUMNS
    assert row["version"] == __version__
    assert row["model"] == "site:0.7"
    assert row["samples"] == 500


def test_trivial():
    est = estimate_one_arm(make_aon(2, 1.0), 2, 10, UNION, 100, seed=0)
    assert est.successes == 100
    assert est.p_hat == 1.0
    est = estimate_one_arm(make_aon(2, 0.0), 2, 10, UNION, 100, seed=0)
    assert est.successes == 0
    with pytest.raises(DomainError):
        estimate_one_arm(make_aon(2, 0.0), 2, 10, UNION, 0, seed=0)


def test_workers():
    law = make_dng(2, 0.5)
    base = estimate_one_arm(law, 2, 6, DIRECTED, 3000, seed=9)
    for workers in (2, 5, 2):
        assert estimate_one_arm(law, 2, 6, DIRECTED, 3000, seed=9, workers=workers) == base
    for workers in (0, 257, 1.5):
        with pytest.raises(DomainError, match="workers"):
            estimate_one_arm(law, 2, 6, DIRECTED, 3000, seed=9, workers=workers)


def test_survival_proxy():
    est = survival_proxy(make_aon(2, 1.0), 2, DIRECTED, 50, seed=0, max_sites=100)
    # |B_7| = 113 > 100 >= |B_6| = 85, so n = 5
    assert est.n == 5
    assert est.model == "aon(1)@theta-proxy(n=5)"
    assert est.p_hat == 1.0


def test_scan():
    grid = [0.2, 0.5, 0.8]
    out = scan_parameter(family("iid", 1), grid, 1, 1, DIRECTED, 3000, seed=2)
    assert [e.model for e in out] == ["iid(0.2)", "iid(0.5)", "iid(0.8)"]
    assert out[0].p_hat < out[1].p_hat < out[2].p_hat
    assert all(e.seed == 2 for e in out)

    out = scan_parameter(
        family("iid", 1), grid, 1, 1, DIRECTED, 300, seed=2, common_random_numbers=False
    )
    assert len({e.seed for e in out}) == 3

    with pytest.raises(DomainError):
        scan_parameter(family("iid", 1), [0.5, 0.2], 1, 1, DIRECTED, 10, seed=0)
    with pytest.raises(DomainError):
        scan_parameter(family("iid", 1), [], 1, 1, DIRECTED, 10, seed=0)
    with pytest.raises(DomainError, match="1.5"):
        scan_parameter(family("iid", 1), [0.5, 1.5], 1, 1, DIRECTED, 10, seed=0)


def test_fit_decay():
    fit = fit_decay(make_iid(2, 0.2), 2, [1, 2, 3, 4], DIRECTED, 20_000, seed=3)
    print(fit)
    assert fit.radii == [1, 2, 3, 4]
    assert fit.dropped == []
    assert fit.c_hat > 0
    assert fit.to_dict()["c_hat"] == fit.c_hat

    with pytest.raises(InsufficientDataError):
        fit_decay(make_aon(2, 0.0), 2, [1, 2, 3], DIRECTED, 100, seed=3)
    with pytest.raises(DomainError):
        fit_decay(make_iid(2, 0.2), 2, [2, 1, 3], DIRECTED, 100, seed=3)


def test_pseudo_critical():
    # d = 1, n = 1: 1 - (1 - p^2)^2 crosses 0.4375 at p = 1/2
    x = pseudo_critical(
        family("iid", 1), 1, 1, DIRECTED, 0.4375, 8000, seed=4, tol=0.01
    )
    assert x == pytest.approx(0.5, abs=0.05)

    with pytest.raises(BracketError, match="upper endpoint"):
        pseudo_critical(
            family("iid", 1), 1, 1, DIRECTED, 0.99, 1000, seed=4, tol=0.01, hi=0.9
        )
    with pytest.raises(BracketError, match="lower endpoint"):
        pseudo_critical(
            family("iid", 1), 1, 1, DIRECTED, 0.3, 1000, seed=4, tol=0.01, lo=0.9
        )
    with pytest.raises(DomainError):
        pseudo_critical(family("iid", 1), 1, 1, DIRECTED, 1.5, 100, seed=4, tol=0.01)


def test_interval_coverage():
    cases = [
        (make_dng(2, 0.5), 2, 1),
        (make_iid(1, 0.5), 1, 2),
    ]
    for law, d, n in cases:
        truth = exact_one_arm(law, d, n)
        covered = 0
        for seed in range(200):
            est = estimate_one_arm(law, d, n, DIRECTED, 10_000, seed=seed)
            covered += est.ci_low <= truth <= est.ci_high
        print(law.name, n, truth, covered)
        assert covered >= 180


def test_domination_transfers_to_one_arm():
    pairs = [
        (make_iid(2, 0.5), make_dng(2, 0.5), 2),
        (make_aon(2, 0.5), make_iid(2, 0.5), 2),
        (make_iid(3, 1 / 3), make_dng(3, 1 / 3), 3),
    ]
    for P, Q, d in pairs:
        assert check_local_domination(P, Q).holds
        for n in (4, 16, 32):
            a = estimate_one_arm(P, d, n, DIRECTED, 20_000, seed=13)
            b = estimate_one_arm(Q, d, n, DIRECTED, 20_000, seed=13)
            print(n, a.model, a.p_hat, b.model, b.p_hat)
            assert a.p_hat <= b.p_hat + 3 * math.sqrt(a.stderr**2 + b.stderr**2)


@pytest.mark.slow
def test_decay_subcritical_and_plateau():
    radii = [4, 8, 12, 16, 20]
    fit = fit_decay(make_iid(2, 0.3), 2, radii, DIRECTED, 200_000, seed=21, workers=4)
    print(fit)
    assert fit.dropped == []
    assert fit.c_hat > 0.05
    assert fit.r_squared > 0.98

    fit = fit_decay(make_iid(2, 0.7), 2, radii, DIRECTED, 20_000, seed=21, workers=4)
    print(fit)
    assert abs(fit.c_hat) < 0.01


@pytest.mark.slow
def test_planar_pseudo_critical():
    kw = dict(tol=0.005, workers=4)
    x_iid = pseudo_critical(family("iid", 2), 2, 64, DIRECTED, 0.5, 20_000, 31, **kw)
    x_dng = pseudo_critical(family("dng", 2), 2, 64, DIRECTED, 0.5, 20_000, 31, **kw)
    print(x_iid, x_dng)
    assert 0.45 <= x_iid <= 0.55
    assert x_dng <= x_iid + 0.01
