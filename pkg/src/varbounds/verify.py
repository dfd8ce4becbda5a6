"""Acceptance and invariant checks, runnable from the CLI or from pytest.

Every check returns a :class:`CheckResult`; none of them raise on failure.
Expected values come from independent routes (exact rationals, brute-force
double sums, LU determinants, direct arithmetic) rather than from the code
path under test.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bounds, lln, processes, table1, tails
from .model import CovarianceModel, WeightClass, as_profile, check_correlation, random_correlation


@dataclass(frozen=True)
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.key} {self.title}: {self.detail} ({self.seconds:.2f}s)"


def _timed(key: str, title: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(key, title, bool(ok), detail, time.perf_counter() - start)


def _close(x: float, y, rel: float = 1e-12, abs_: float = 1e-12) -> bool:
    return math.isclose(float(x), float(y), rel_tol=rel, abs_tol=abs_)


# -- grid enumeration -----------------------------------------------------------------


def _table_row(n: int, total: int, violations: int | None, limit: float):
    start = time.perf_counter()
    row = table1.run_table1(n)
    elapsed = time.perf_counter() - start
    ok = row.total_cases == total and elapsed < limit
    if violations is not None:
        ok = ok and row.violation_cases == violations
    return row, elapsed, ok


def check_table1_n2() -> tuple[bool, str]:
    row, t, ok = _table_row(2, 3600, 520, 1.0)
    return ok, f"total={row.total_cases} violations={row.violation_cases} ratio={row.ratio_text}% in {t:.3f}s"


def check_table1_n3() -> tuple[bool, str]:
    row, t, ok = _table_row(3, 288000, 29137, 5.0)
    return ok, f"total={row.total_cases} violations={row.violation_cases} ratio={row.ratio_text}% in {t:.3f}s"


def check_table1_n4() -> tuple[bool, str]:
    row, t, ok = _table_row(4, 84 * 160000, None, 60.0)
    noted = any("13760000" in note for note in row.notes)
    ok = ok and 5.0 <= row.ratio <= 7.0 and noted
    return ok, (
        f"total={row.total_cases} violations={row.violation_cases} ratio={row.ratio:.4f}% "
        f"note={'yes' if noted else 'MISSING'} in {t:.2f}s"
    )


# -- bounds ------------------------------------------------------------------


GOLDEN = [
    # (fixture, exact variance, sum a_i v_i)
    ("aligned-unit", Fraction(4), Fraction(2)),
    ("aligned-half", Fraction(1), Fraction(1)),
    ("aligned-half-third", Fraction(25, 36), Fraction(5, 6)),
    ("opposed-unit", Fraction(0), Fraction(2)),
    ("opposed-half", Fraction(0), Fraction(1)),
    ("uncorrelated-half", Fraction(1, 2), Fraction(1)),
]


def check_golden() -> tuple[bool, str]:
    bad = []
    for name, exact, weighted in GOLDEN:
        report = bounds.bound_report(*bounds.tight_case(name))
        if not _close(report.exact, exact):
            bad.append(f"{name} exact {report.exact} != {exact}")
        if not _close(report.bounds["T1"].value, weighted):
            bad.append(f"{name} sum a v {report.bounds['T1'].value} != {weighted}")
    # sum a_i^2 Var(X_i) = 1/2 for the uncorrelated half pair
    c3 = bounds.bound_report(*bounds.tight_case("uncorrelated-half")).bounds["C3chain"].chain
    if not _close(c3[0], 0.5):
        bad.append(f"sum a^2 v = {c3[0]} != 1/2")
    return not bad, "; ".join(bad) or f"{len(GOLDEN)} fixtures, variances {{4,1,25/36,0,1/2}} and sums {{2,1,5/6}} match"


def random_weights(rng: np.random.Generator, n: int, kind: str) -> np.ndarray:
    if kind == "simplex":
        return rng.dirichlet(np.ones(n))
    if kind == "sub-simplex":
        return rng.dirichlet(np.ones(n)) * rng.uniform(0.05, 0.95)
    if kind == "non-negative":
        return rng.uniform(0.0, 3.0, n)
    if kind == "general":
        return rng.uniform(-3.0, 3.0, n)
    raise ValueError(kind)


def random_instance(seed: int, kind: str) -> tuple[np.ndarray, CovarianceModel]:
    rng = np.random.default_rng([seed, 17])
    n = int(rng.integers(2, 9))
    weights = random_weights(rng, n, kind)
    variances = rng.uniform(0.0, 10.0, n)
    return weights, CovarianceModel(as_profile(variances), random_correlation(n, seed))


DOMINANCE = {
    "T1": ("simplex", WeightClass.SIMPLEX),
    "T1prime": ("simplex", WeightClass.SIMPLEX),
    "T3": ("sub-simplex", WeightClass.SUB_SIMPLEX),
    "T4": ("non-negative", None),
    "T5": ("general", None),
}


def dominance_failures(tag: str, count: int = 1000, base_seed: int = 0) -> list[str]:
    kind, expected_class = DOMINANCE[tag]
    failures = []
    for k in range(count):
        seed = base_seed + k
        w, model = random_instance(seed, kind)
        report = bounds.bound_report(w, model)
        entry = report.bounds[tag]
        if expected_class is not None and report.weight_class is not expected_class:
            failures.append(f"seed {seed}: weights classified {report.weight_class.value}")
        elif not entry.applicable:
            failures.append(f"seed {seed}: {tag} not applicable")
        elif report.exact > entry.value + bounds.SLACK_TOL * max(1.0, report.exact):
            failures.append(f"seed {seed}: exact {report.exact} > {tag} {entry.value}")
    return failures


def check_dominance() -> tuple[bool, str]:
    parts, ok = [], True
    for tag in DOMINANCE:
        fails = dominance_failures(tag)
        ok = ok and not fails
        parts.append(f"{tag}:{len(fails)}")
    return ok, "violations per class " + " ".join(parts) + " over 1000 instances each"


def check_minor_oracle(vectors: int = 200) -> tuple[bool, str]:
    rng = np.random.default_rng(2024)
    worst, subsets = 0.0, 0
    for _ in range(vectors):
        a = rng.dirichlet(np.ones(int(rng.integers(2, 11))))
        A = np.diag(a) - np.outer(a, a)
        for k in range(1, min(5, a.size) + 1):
            for idx in itertools.combinations(range(a.size), k):
                sub = a[list(idx)]
                closed = math.prod(sub) * (1.0 - math.fsum(sub))
                det = float(np.linalg.det(A[np.ix_(idx, idx)]))
                scale = max(abs(closed), abs(det), math.prod(sub))
                worst = max(worst, abs(closed - det) / scale)
                subsets += 1
    oracle_ok = worst <= 1e-10

    psd_fail = []
    for seed in range(60):
        r = np.random.default_rng([seed, 99])
        n = int(r.integers(2, 13))
        for kind in ("simplex", "sub-simplex"):
            a = random_weights(r, n, kind)
            verdict = bounds.check_A_psd(a)
            if not verdict.psd or verdict.method != "minors":
                psd_fail.append(f"{kind} n={n} seed={seed}")
    ok = oracle_ok and not psd_fail
    return ok, (
        f"max rel gap {worst:.2e} over {subsets} subsets; "
        f"exhaustive PSD failures {len(psd_fail)}/120"
    )


# -- processes ---------------------------------------------------------------


def check_triangle() -> tuple[bool, str]:
    worst = 0.0
    for sigma in (0.5, 1.0, 2.0):
        proc = processes.RunningMeanNormal(0.0, sigma)
        for n in range(1, 101):
            brute = processes.kernel_double_sum(proc, n) / n**2
            closed = processes.running_mean_var_of_mean(sigma, n)
            worst = max(worst, abs(closed - brute) / brute)
    for lam in (0.1, 1.0, 5.0):
        proc = processes.Telegraph(lam)
        for n in range(1, 101):
            brute = processes.kernel_double_sum(proc, n) / n**2
            closed = processes.telegraph_var_of_mean(lam, n)
            worst = max(worst, abs(closed - brute) / brute)
    return worst <= 1e-12, f"max rel error {worst:.2e} over n<=100, 3 sigmas, 3 lambdas"


def _within(est: processes.Estimate, target: float, k: float = 3.0) -> bool:
    return abs(est.estimate - target) <= k * est.std_error


def check_monte_carlo(reps: int = 100_000, seed: int = 20240601) -> tuple[bool, str]:
    rm = processes.RunningMeanNormal(0.0, 1.0)
    tg = processes.Telegraph(1.0)
    results = []
    slow = 0.0
    for label, proc, stat, n, target, kw in (
        ("telegraph var_of_mean", tg, "var_of_mean_n", 20, processes.telegraph_var_of_mean(1.0, 20), {}),
        ("running-mean var_of_mean", rm, "var_of_mean_n", 20, processes.running_mean_var_of_mean(1.0, 20), {}),
        ("Cov(S2,S5)", rm, "cov", 5, 0.2, {"i": 2, "j": 5}),
        ("telegraph mean", tg, "mean_n", 20, 0.5, {}),
    ):
        start = time.perf_counter()
        est = processes.mc_estimate(proc, stat, n, reps, seed, **kw)
        slow = max(slow, time.perf_counter() - start)
        z = (est.estimate - target) / est.std_error if est.std_error else 0.0
        results.append((label, _within(est, target), z))
    ok = all(r[1] for r in results) and slow < 30.0
    return ok, ", ".join(f"{label} z={z:+.2f}" for label, _, z in results) + f"; slowest {slow:.2f}s"


# -- tails -------------------------------------------------------------------

TAIL_FIXTURES = (
    ("running-mean", processes.RunningMeanNormal(0.0, 1.0), 10),
    ("telegraph", processes.Telegraph(1.0), 50),
)


def check_chebyshev(reps: int = 10_000, seed: int = 7) -> tuple[bool, str]:
    deltas = tails.delta_grid()
    breaches = []
    for name, proc, n in TAIL_FIXTURES:
        ests = tails.empirical_tail_curve(proc, n, deltas, reps, seed)
        for d, est in zip(deltas, ests):
            bound = tails.process_tail_bound(proc, n, float(d))
            if est.estimate > bound + 3.0 * est.std_error:
                breaches.append(f"{name} delta={d}")

    ratio_bad = []
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        v = rng.uniform(0.0, 5.0, n)
        d = float(rng.uniform(0.05, 3.0))
        corr = tails.tail_bound_mean(v, d, True)
        unc = tails.tail_bound_mean(v, d, False)
        if unc != corr / n:
            ratio_bad.append(n)

    plug = [
        tails.tail_bound_standardized(4, 2.0, True) == 0.25,
        tails.tail_bound_standardized(3, 3.0, False) == 1.0,
        tails.tail_bound_standardized(10, 0.5, True) == 4.0,
        tails.tail_bound_standardized(10, 0.5, False) == 400.0,
    ]
    ok = not breaches and not ratio_bad and all(plug)
    return ok, (
        f"empirical breaches {len(breaches)}/{2 * len(deltas)}; "
        f"uncorrelated/correlated != 1/n in {len(ratio_bad)}/200; standardized plug-ins exact: {all(plug)}"
    )


# -- lln ---------------------------------------------------------------------


def check_lln(profiles: int = 1000) -> tuple[bool, str]:
    grid = range(1, 201)
    rm = processes.RunningMeanNormal(0.0, 1.0)
    tg = processes.Telegraph(1.0)

    rm_var = lln.lln_diagnostic(rm, "Markov28", grid)
    h200 = float(sum(Fraction(1, i) for i in range(1, 201)) / 200)
    rm_ok = rm_var.verdict is lln.Verdict.CONVERGING and _close(rm_var.values[-1], h200)

    tg_var = lln.lln_diagnostic(tg, "Markov28", grid)
    tg_var_ok = tg_var.verdict is lln.Verdict.NOT_CONVERGING and all(v == 0.25 for v in tg_var.values)

    tg_branch = lln.theorem12_check(tg, grid, cap=1.0, s=0.5)
    tg_branch_ok = tg_branch.verdict is lln.Verdict.CONVERGING and tg_branch.values[-1] < 0.02

    rng = np.random.default_rng(11)
    monotone_bad = 0
    for _ in range(profiles):
        v = rng.uniform(0.0, 10.0, int(rng.integers(1, 30))) ** rng.uniform(0.2, 3.0)
        r, s = sorted(rng.uniform(1e-3, 4.0, 2))
        lo, hi = lln.power_mean(v, r), lln.power_mean(v, s)
        if lo > hi + 1e-10 * max(1.0, hi):
            monotone_bad += 1

    ok = rm_ok and tg_var_ok and tg_branch_ok and monotone_bad == 0
    return ok, (
        f"running-mean mean-variance {rm_var.verdict.value} H200/200={rm_var.values[-1]:.6f}; "
        f"telegraph mean-variance {tg_var.verdict.value} value={tg_var.values[-1]}; "
        f"telegraph two-branch {tg_branch.verdict.value} Var(mean_200)={tg_branch.values[-1]:.5f}; "
        f"power-mean monotonicity failures {monotone_bad}/{profiles}"
    )


# -- supporting invariants ---------------------------------------------------


def check_random_correlation(seeds: int = 200, max_n: int = 32) -> tuple[bool, str]:
    bad = 0
    for n in range(1, max_n + 1):
        for seed in range(seeds):
            if check_correlation(random_correlation(n, seed).entries):
                bad += 1
    return bad == 0, f"{bad} invalid matrices over n<=32 x {seeds} seeds"


def check_covariance_sandwich(count: int = 500) -> tuple[bool, str]:
    bad = 0
    for seed in range(count):
        _, model = random_instance(seed, "simplex")
        res = bounds.covariance_sum_bounds(model)
        mean_var = bounds.exact_variance(np.full(model.n, 1.0 / model.n), model)
        if not res.holds or mean_var > math.fsum(model.profile.variances) / model.n + 1e-9:
            bad += 1
    return bad == 0, f"{bad}/{count} instances break the covariance sandwich or variance-of-mean bound"


def check_telegraph_flip() -> tuple[bool, str]:
    worst = 0.0
    for lam in (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0):
        series = processes.poisson_odd_probability(lam)
        closed = processes.Telegraph(lam).switch_probability[0]
        worst = max(worst, abs(series - closed))
    return worst <= 1e-12, f"max |series - (1-e^(-2 lambda))/2| = {worst:.2e}"


ACCEPTANCE = [
    ("AC1", "grid enumeration n=2", check_table1_n2),
    ("AC2", "grid enumeration n=3", check_table1_n3),
    ("AC3", "grid enumeration n=4", check_table1_n4),
    ("AC4", "golden examples", check_golden),
    ("AC5", "bound dominance", check_dominance),
    ("AC6", "minor formula and A PSD", check_minor_oracle),
    ("AC7", "closed form vs double sum", check_triangle),
    ("AC8", "Monte Carlo agreement", check_monte_carlo),
    ("AC9", "Chebyshev sandwich", check_chebyshev),
    ("AC10", "weak-law verdicts", check_lln),
]

INVARIANTS = [
    ("INV1", "random correlation validity", check_random_correlation),
    ("INV2", "covariance sum sandwich", check_covariance_sandwich),
    ("INV3", "telegraph flip probability", check_telegraph_flip),
]


def run_all(include_invariants: bool = True) -> list[CheckResult]:
    checks = ACCEPTANCE + (INVARIANTS if include_invariants else [])
    return [_timed(key, title, fn) for key, title, fn in checks]
