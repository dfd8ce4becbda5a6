import math

import numpy as np
import pytest

from varbounds import processes as P
from varbounds.errors import InvalidInput, InvalidModel


def test_running_mean_kernel():
    rm = P.RunningMeanNormal(0.0, 1.0)
    assert P.kernel_cov(rm, 2, 5) == pytest.approx(0.2)
    assert P.kernel_cov(rm, 5, 2) == pytest.approx(0.2)
    assert rm.variance(4) == pytest.approx(0.25)
    rm2 = P.RunningMeanNormal(0.0, 2.0)
    assert P.kernel_cov(rm2, 3, 3 + 4) == pytest.approx(4.0 / 7)


def test_telegraph_kernel():
    tg = P.Telegraph(0.5)
    assert P.kernel_cov(tg, 3, 3) == 0.25
    assert P.kernel_cov(tg, 1, 3) == pytest.approx(0.25 * math.exp(-2), rel=1e-15)
    assert P.kernel_cov(tg, 1, 3) == pytest.approx(0.033834, abs=1e-6)
    with pytest.raises(InvalidInput):
        P.kernel_cov(tg, 0, 1)


def test_telegraph_stationary_kernel():
    for lam in (0.1, 1.0, 3.0):
        tg = P.Telegraph(lam, 0.3)
        for k in range(0, 8):
            vals = {tg.cov(i, i + k) for i in range(1, 30)} | {tg.cov(i + k, i) for i in range(1, 30)}
            assert len(vals) == 1


def test_cov_matrix_matches_scalar_kernel():
    for proc in (P.RunningMeanNormal(1.0, 1.5), P.Telegraph(0.7, 0.4)):
        C = proc.cov_matrix(12)
        for i in range(1, 13):
            for j in range(1, 13):
                assert C[i - 1, j - 1] == pytest.approx(proc.cov(i, j), rel=1e-15)


def test_user_kernel_validation():
    ok = P.UserKernel(lambda i: 2.0, lambda i, j: 2.0 if i == j else 1.0 / (i + j))
    assert P.kernel_cov(ok, 2, 3) == pytest.approx(0.2)
    asym = P.UserKernel(lambda i: 1.0, lambda i, j: 1.0 if i == j else float(i))
    with pytest.raises(InvalidModel):
        asym.cov(1, 2)
    diag = P.UserKernel(lambda i: 1.0, lambda i, j: 0.5)
    with pytest.raises(InvalidModel):
        diag.cov(2, 2)


@pytest.mark.parametrize(
    "kwargs", [dict(name="running-mean", sigma=0.0), dict(name="telegraph", lam=0.0), dict(name="telegraph", p=1.0), dict(name="nope")]
)
def test_make_process_rejects(kwargs):
    name = kwargs.pop("name")
    with pytest.raises(InvalidInput):
        P.make_process(name, **kwargs)


def test_running_mean_closed_form_examples():
    assert P.running_mean_var_of_mean(1.7, 1) == pytest.approx(1.7**2)
    assert P.running_mean_var_of_mean(1.0, 2) == pytest.approx(0.625, rel=1e-15)
    with pytest.raises(InvalidInput):
        P.running_mean_var_of_mean(1.0, 0)


def test_telegraph_closed_form_examples():
    for lam in (0.1, 1.0, 5.0):
        assert P.telegraph_var_of_mean(lam, 1) == pytest.approx(0.25, rel=1e-15)
        assert P.telegraph_var_of_mean(lam, 2) == pytest.approx((1 + math.exp(-2 * lam)) / 8, rel=1e-14)
    with pytest.raises(InvalidInput):
        P.telegraph_var_of_mean(0.0, 3)


def test_telegraph_closed_form_general_p():
    tg = P.Telegraph(0.8, 0.2)
    for n in (1, 5, 37):
        assert P.var_of_mean(tg, n) == pytest.approx(P.kernel_double_sum(tg, n) / n**2, rel=1e-12)


def test_var_of_mean_user_kernel_uses_double_sum():
    uk = P.UserKernel(lambda i: 1.0, lambda i, j: 1.0 if i == j else 0.0)
    assert P.var_of_mean(uk, 10) == pytest.approx(0.1)


def test_harmonic_remainder_shrinks():
    assert P.harmonic(1) == 1.0
    assert P.harmonic_remainder(1000) == pytest.approx(1 / 2000, rel=1e-2)


@pytest.mark.parametrize("lam", [0.01, 0.3, 1.0, 7.5, 40.0])
def test_poisson_odd_probability(lam):
    assert P.poisson_odd_probability(lam) == pytest.approx(-math.expm1(-2 * lam) / 2, abs=1e-12)
    assert P.Telegraph(lam).switch_probability[0] == pytest.approx(P.poisson_odd_probability(lam), abs=1e-12)


def test_poisson_odd_probability_rejects_nonpositive():
    with pytest.raises(InvalidInput):
        P.poisson_odd_probability(0.0)


def test_sample_paths_are_deterministic_and_valid():
    a = P.sample_telegraph(1.0, 0.5, 50, seed=3)
    b = P.sample_telegraph(1.0, 0.5, 50, seed=3)
    assert np.array_equal(a.values, b.values)
    assert set(np.unique(a.values)) <= {0.0, 1.0}
    r = P.sample_running_mean(0.0, 1.0, 30, seed=3)
    assert np.all(np.isfinite(r.values)) and r.values.shape == (30,)
    with pytest.raises(InvalidInput):
        P.sample_running_mean(0.0, -1.0, 30, seed=3)


def test_running_mean_path_is_running_mean():
    # a one-path draw: S_k * k must have iid normal increments, so S_1 = X_1
    paths = P.RunningMeanNormal(0.0, 1.0).sample(np.random.default_rng(0), 2000, 6)
    x = paths * np.arange(1, 7)
    inc = np.diff(np.concatenate([np.zeros((2000, 1)), x], axis=1), axis=1)
    assert abs(np.corrcoef(inc[:, 0], inc[:, 3])[0, 1]) < 0.1
    assert np.std(inc) == pytest.approx(1.0, abs=0.05)


def test_sample_paths_worker_independent():
    for proc in (P.RunningMeanNormal(0.0, 1.0), P.Telegraph(1.0)):
        one = P.sample_paths(proc, 15, 10_000, seed=11, workers=1)
        four = P.sample_paths(proc, 15, 10_000, seed=11, workers=4)
        assert np.array_equal(one, four)


def test_sample_paths_rejects_user_kernel():
    with pytest.raises(InvalidInput):
        P.sample_paths(P.UserKernel(lambda i: 1.0, lambda i, j: 1.0), 3, 100, 0)


def test_mc_estimate_validation():
    rm = P.RunningMeanNormal()
    with pytest.raises(InvalidInput):
        P.mc_estimate(rm, "mean_n", 5, 99, 0)
    with pytest.raises(InvalidInput):
        P.mc_estimate(rm, "cov", 5, 1000, 0, i=0, j=2)
    with pytest.raises(InvalidInput):
        P.mc_estimate(rm, "tail", 5, 1000, 0)
    with pytest.raises(InvalidInput):
        P.mc_estimate(rm, "median", 5, 1000, 0)


def test_mc_deterministic_and_worker_independent():
    tg = P.Telegraph(1.0)
    a = P.mc_estimate(tg, "var_of_mean_n", 20, 20_000, 5)
    b = P.mc_estimate(tg, "var_of_mean_n", 20, 20_000, 5, workers=3)
    assert a == b


def test_mc_running_mean_with_offset_mean():
    est = P.mc_estimate(P.RunningMeanNormal(3.0, 1.0), "mean_n", 10, 50_000, 2)
    assert abs(est.estimate - 3.0) <= 3 * est.std_error


@pytest.mark.parametrize("proc", [P.RunningMeanNormal(0.0, 1.0), P.Telegraph(1.0)], ids=["running-mean", "telegraph"])
def test_standard_error_shrinks_by_root_two(proc):
    for stat in ("mean_n", "var_of_mean_n"):
        small = P.mc_estimate(proc, stat, 20, 50_000, 1)
        large = P.mc_estimate(proc, stat, 20, 100_000, 2)
        assert small.std_error / large.std_error == pytest.approx(math.sqrt(2), rel=0.10)


def _within(est, target):
    return abs(est.estimate - target) <= 3 * est.std_error


def test_million_paths_running_mean():
    rm = P.RunningMeanNormal(0.0, 1.0)
    assert _within(P.mc_estimate(rm, "cov", 5, 1_000_000, 21, i=2, j=5, workers=4), 0.2)
    assert _within(P.mc_estimate(rm, "mean_n", 5, 1_000_000, 22, workers=4), 0.0)


def test_million_paths_telegraph():
    tg = P.Telegraph(1.0)
    assert _within(P.mc_estimate(tg, "mean_n", 5, 1_000_000, 23, workers=4), 0.5)
    assert _within(P.mc_estimate(tg, "cov", 3, 1_000_000, 24, i=1, j=3, workers=4), 0.25 * math.exp(-4))


def test_telegraph_general_p_stationary_mean_and_cov():
    tg = P.Telegraph(0.6, 0.25)
    assert _within(P.mc_estimate(tg, "mean_n", 10, 200_000, 31), 0.25)
    assert _within(P.mc_estimate(tg, "cov", 4, 200_000, 32, i=2, j=4), tg.cov(2, 4))
    assert _within(P.mc_estimate(tg, "var_of_mean_n", 10, 200_000, 33), P.var_of_mean(tg, 10))
