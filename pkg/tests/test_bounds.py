import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varbounds import bounds
from varbounds.errors import InvalidInput, InvariantViolation, NotApplicable
from varbounds.model import CorrelationMatrix, CovarianceModel, WeightClass, random_correlation
from varbounds.verify import dominance_failures, random_instance

H, T = Fraction(1, 2), Fraction(1, 3)


def pair(rho, v=(1.0, 1.0)):
    return CovarianceModel.from_arrays(list(v), [[1.0, rho], [rho, 1.0]])


@pytest.mark.parametrize(
    "w,rho,expected",
    [((1, 1), 1.0, 4.0), ((H, H), -1.0, 0.0), ((H, T), 1.0, 25 / 36), ((1, 1), -1.0, 0.0)],
)
def test_exact_variance_examples(w, rho, expected):
    assert bounds.exact_variance(w, pair(rho)) == pytest.approx(expected, abs=1e-15)


def test_exact_variance_matches_quadratic_form():
    for seed in range(50):
        w, m = random_instance(seed, "general")
        direct = float(w @ m.covariance @ w)
        assert bounds.exact_variance(w, m) == pytest.approx(max(direct, 0.0), rel=1e-12, abs=1e-9)


def test_exact_variance_dimension_mismatch():
    with pytest.raises(InvalidInput):
        bounds.exact_variance((1, 1, 1), pair(0.0))


def test_theorem1_examples():
    assert bounds.bound_theorem1((H, T), [1, 1]) == pytest.approx(5 / 6, rel=1e-15)
    assert bounds.bound_theorem1([0.25] * 4, [3.0] * 4) == pytest.approx(3.0)
    assert bounds.bound_theorem1((0.2, 0.3), (2, 4)) == pytest.approx(1.6, rel=1e-15)
    with pytest.raises(NotApplicable):
        bounds.bound_theorem1((1, 1), (1, 1))


def test_theorem1prime_examples():
    assert bounds.bound_theorem1prime([0.25] * 4, [1, 2, 3, 4]) == pytest.approx(2.5)
    assert bounds.bound_theorem1prime((0.1, 0.9), (0.1, 2.0)) == pytest.approx(1.722, rel=1e-12)
    assert bounds.bound_theorem1((0.1, 0.9), (0.1, 2.0)) == pytest.approx(1.81, rel=1e-12)
    assert bounds.bound_theorem1((0.1, 0.9), (2.0, 0.1)) == pytest.approx(0.29, rel=1e-12)
    with pytest.raises(NotApplicable):
        bounds.bound_theorem1prime((0.2, 0.3), (1, 1))


def test_theorem4_and_5_examples():
    assert bounds.bound_theorem4((2, 1), (1, 1)) == pytest.approx(9.0)
    assert bounds.exact_variance((2, 1), pair(1.0)) == pytest.approx(9.0)
    assert bounds.bound_theorem4((0, 0), (5, 7)) == 0.0
    assert bounds.bound_theorem4((H, H), (3, 5)) == pytest.approx(4.0)
    with pytest.raises(NotApplicable):
        bounds.bound_theorem4((-1, 1), (1, 1))
    assert bounds.bound_theorem5((-0.5, 0.5), (1, 1)) == pytest.approx(1.0)
    assert bounds.exact_variance((-0.5, 0.5), pair(-1.0)) == pytest.approx(1.0)
    assert bounds.bound_theorem5((0, 0, 0), (1, 2, 3)) == 0.0
    assert bounds.bound_theorem5((2, 1), (1, 1)) == bounds.bound_theorem4((2, 1), (1, 1))


def test_report_applicability_matrix():
    cases = {
        WeightClass.SIMPLEX: (0.5, 0.5),
        WeightClass.SUB_SIMPLEX: (0.2, 0.3),
        WeightClass.NON_NEGATIVE: (1.0, 2.0),
        WeightClass.GENERAL: (-1.0, 2.0),
    }
    for cls, w in cases.items():
        r = bounds.bound_report(w, pair(0.3))
        assert r.weight_class is cls
        b = r.bounds
        assert b["T5"].applicable
        assert b["T1"].applicable == (cls is WeightClass.SIMPLEX)
        assert b["T1prime"].applicable == (cls is WeightClass.SIMPLEX)
        assert b["T3"].applicable == (cls is WeightClass.SUB_SIMPLEX)
        assert b["T4"].applicable == (cls is not WeightClass.GENERAL)
        assert r.ok


def test_report_examples():
    r = bounds.bound_report((H, H), pair(1.0))
    assert r.exact == pytest.approx(1.0) and r.bounds["T1"].slack == pytest.approx(0.0, abs=1e-15)
    r = bounds.bound_report((H, H), pair(0.0))
    assert r.bounds["C3chain"].chain == pytest.approx((0.5, 1.0, 2.0))
    r = bounds.bound_report((1, 1), pair(-1.0))
    assert r.exact == 0.0 and r.bounds["T5"].value == 4.0 and not r.bounds["T1"].applicable


def test_report_c2_chain_recorded_when_abs_sum_at_most_one():
    r = bounds.bound_report((0.3, -0.4), pair(0.2, (2.0, 5.0)))
    chain = r.bounds["C2chain"].chain
    assert chain is not None and chain[0] <= chain[1] <= chain[2]
    assert bounds.bound_report((1, 1), pair(0.2)).bounds["C2chain"].chain is None


def test_tight_fixtures_attain_bounds():
    w, m = bounds.tight_case("aligned-unit")
    r = bounds.bound_report(w, m)
    assert r.bounds["T5"].slack == 0.0 and r.bounds["T4"].slack == 0.0
    with pytest.raises(InvalidInput):
        bounds.tight_case("nope")


def test_hypothetical_suppresses_dominance():
    r = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
    m = CovarianceModel(bounds.as_profile([1, 1, 1]), CorrelationMatrix(r, allow_non_psd=True))
    rep = bounds.bound_report((1, -1, 1), m)
    assert rep.hypothetical and rep.violations() == []
    assert rep.to_dict()["hypothetical"] is True


def test_report_check_raises_on_violation():
    rep = bounds.bound_report((0.5, 0.5), pair(0.5))
    exact = rep.exact + 1.0
    entries = {k: bounds.BoundEntry(e.value, e.applicable, e.value - exact if e.applicable else None) for k, e in rep.bounds.items()}
    forged = bounds.BoundReport(exact=exact, bounds=entries, weight_class=rep.weight_class)
    assert "T1" in forged.violations()
    with pytest.raises(InvariantViolation):
        forged.check()


@pytest.mark.parametrize("tag", ["T1", "T1prime", "T3", "T4", "T5"])
def test_dominance_1000_instances(tag):
    assert dominance_failures(tag, 1000, base_seed=50_000) == []


def test_mean_of_variances_dominates_variance_of_mean():
    for seed in range(300):
        _, m = random_instance(seed, "simplex")
        n = m.n
        assert bounds.exact_variance([Fraction(1, n)] * n, m) <= math.fsum(m.profile.variances) / n + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.floats(-5, 5, allow_nan=False))
def test_scale_covariance(seed, c):
    w, m = random_instance(seed, "general")
    base = bounds.exact_variance(w, m)
    scaled = bounds.exact_variance(c * w, m)
    assert scaled == pytest.approx(c * c * base, rel=1e-12, abs=1e-9 * max(1.0, c * c * base))


# -- matrix A ------------------------------------------------------------------


def test_principal_minor_examples():
    a = (0.5, 0.3, 0.2)
    assert bounds.principal_minor(a, (0, 1)) == pytest.approx(0.03, rel=1e-12)
    assert bounds.principal_minor(a, (2,)) == pytest.approx(0.16, rel=1e-12)
    assert bounds.principal_minor(a, (0, 1, 2)) == pytest.approx(0.0, abs=1e-16)
    assert bounds.direct_minor(a, (0, 1)) == pytest.approx(0.03, rel=1e-12)


@pytest.mark.parametrize("subset", [(), (0, 0), (3,), (-1,)])
def test_principal_minor_rejects_bad_subsets(subset):
    with pytest.raises(InvalidInput):
        bounds.principal_minor((0.5, 0.3, 0.2), subset)


def test_weight_gram_complement_structure():
    a = np.array([0.5, 0.3, 0.2])
    A = bounds.weight_gram_complement(a)
    assert np.array_equal(A, A.T)
    assert np.allclose(np.diag(A), a - a**2)
    assert A[0, 1] == pytest.approx(-0.15)


def test_check_A_psd_not_psd_witness():
    v = bounds.check_A_psd((1.5, 0.5))
    assert not v.psd and v.witness == (0,)
    assert v.min_value < 0


def test_check_A_psd_eigen_path_large_n():
    rng = np.random.default_rng(1)
    v = bounds.check_A_psd(rng.dirichlet(np.ones(20)))
    assert v.psd and v.method == "eigen"
    bad = bounds.check_A_psd(np.r_[2.0, rng.dirichlet(np.ones(19))])
    assert not bad.psd


def test_minor_closed_form_matches_det_random():
    rng = np.random.default_rng(9)
    for _ in range(30):
        a = rng.uniform(-1, 2, int(rng.integers(2, 7)))
        for k in range(1, a.size + 1):
            for idx in itertools.combinations(range(a.size), k):
                assert bounds.minor_agreement(a, idx) <= 1e-10


# -- covariance sandwich ---------------------------------------------------------


def test_covariance_sum_examples():
    r = bounds.covariance_sum_bounds(pair(-1.0))
    assert r.actual == pytest.approx(-1.0) and r.lower == pytest.approx(-1.0)
    m = CovarianceModel.from_arrays([1, 1, 1], CorrelationMatrix.constant(3, 1.0).entries)
    r = bounds.covariance_sum_bounds(m)
    assert r.actual == pytest.approx(2.0) and r.upper == pytest.approx(2.0)
    r = bounds.covariance_sum_bounds(CovarianceModel.from_arrays([1, 2, 3]))
    assert r.actual == 0.0 and r.lower < 0 < r.upper and r.holds
    with pytest.raises(InvalidInput):
        bounds.covariance_sum_bounds(CovarianceModel.from_arrays([1.0]))


def test_covariance_sandwich_random():
    for seed in range(300):
        m = CovarianceModel(bounds.as_profile(np.random.default_rng(seed).uniform(0, 10, 6)), random_correlation(6, seed))
        assert bounds.covariance_sum_bounds(m).holds
