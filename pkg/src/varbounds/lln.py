"""Weak-law sufficient conditions evaluated as sequences in n.

A limit "-> 0" is judged on a finite grid: the values must be non-increasing
over the last half of the grid, with a net decrease, and the last value must
be below ``threshold``. A sequence that only meets one of the two parts is
``INCONCLUSIVE``.

Verdicts are per condition. A condition failing says nothing about whether
the weak law itself fails; the telegraph signal is the standard example.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInput, InvariantViolation
from .processes import ProcessModel, UserKernel

DEFAULT_THRESHOLD = 0.05
RATIO_CAP = 10.0
GROWTH_SLACK = 0.05

CONDITIONS = ("Markov25", "Markov28", "PowerMean30", "Theorem9", "Theorem12")


class Verdict(enum.Enum):
    CONVERGING = "converging"
    NOT_CONVERGING = "not-converging"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class LLNDiagnostic:
    condition: str
    ns: tuple
    values: tuple
    verdict: Verdict
    bounds: tuple | None = None
    parameters: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise InvalidInput(f"unknown condition {self.condition!r}")
        if len(self.ns) != len(self.values) or not self.ns:
            raise InvalidInput("ns and values must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise InvalidInput("sample sizes must be strictly increasing")

    @property
    def samples(self) -> list[tuple[int, float]]:
        return list(zip(self.ns, self.values))


def variances_of(source, n: int) -> np.ndarray:
    """Variances sigma_1^2..sigma_n^2 from a process, a callable or a sequence."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if hasattr(source, "variance"):
        out = [source.variance(k) for k in range(1, n + 1)]
    elif callable(source):
        out = [source(k) for k in range(1, n + 1)]
    else:
        if len(source) < n:
            raise InvalidInput(f"profile has {len(source)} entries, need {n}")
        out = list(source[:n])
    v = np.asarray(out, dtype=np.float64)
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise InvalidInput("variances must be finite and non-negative")
    return v


def _cov_matrix(process, n: int) -> np.ndarray:
    if not hasattr(process, "cov_matrix"):
        raise InvalidInput(f"{process!r} provides no covariance kernel")
    return process.cov_matrix(n)


def markov25_value(process: ProcessModel, n: int) -> float:
    """(1/n^2) sum_{i,j<=n} Cov(X_i, X_j)."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    return math.fsum(_cov_matrix(process, n).ravel()) / n**2


def markov28_value(profile_sequence, n: int) -> float:
    """(1/n) sum_{i<=n} Var(X_i)."""
    return math.fsum(variances_of(profile_sequence, n)) / n


def power_mean(profile: Sequence[float], r: float) -> float:
    """[(1/n) sum v_i^r]^(1/r) for non-negative v and r > 0."""
    if not r > 0:
        raise InvalidInput(f"power mean needs r > 0, got {r}")
    v = np.asarray(profile, dtype=np.float64)
    if v.size == 0 or np.any(v < 0) or not np.all(np.isfinite(v)):
        raise InvalidInput("profile must be non-empty, finite and non-negative")
    top = float(v.max())
    if top == 0.0:
        return 0.0
    # factor out the max so large r cannot overflow
    return top * (math.fsum((v / top) ** r) / v.size) ** (1.0 / r)


def theorem8_condition(profile_sequence, n: int, s: float) -> float:
    """Power mean of the first n variances at exponent s >= 1."""
    if not s >= 1:
        raise InvalidInput(f"exponent must be >= 1, got {s}")
    return power_mean(variances_of(profile_sequence, n), s)


class ScaledVariance(NamedTuple):
    value: float
    bound: float


def theorem9_scaled_variance(profile_sequence, n: int, s: float, cap: float | None = None) -> ScaledVariance:
    """Worst-case Var(n^{-(1+s)} sum X_i) and its cap-based bound.

    value = n * sum Var(X_i) / n^{2+2s}, bound = C / n^{2s}; C defaults to the
    largest of the first n variances.
    """
    if not s > 0:
        raise InvalidInput(f"exponent must be > 0, got {s}")
    v = variances_of(profile_sequence, n)
    if cap is None:
        cap = float(v.max())
    elif not cap > 0:
        raise InvalidInput(f"variance cap must be > 0, got {cap}")
    elif float(v.max()) > cap:
        raise InvalidInput(f"variance {float(v.max())} exceeds cap {cap}")
    value = math.fsum(v) / n ** (1.0 + 2.0 * s)
    bound = cap / n ** (2.0 * s)
    if value > bound * (1.0 + 1e-12):
        raise InvariantViolation(f"scaled variance {value} exceeds bound {bound}")
    return ScaledVariance(value, bound)


def converges_to_zero(values: Sequence[float], threshold: float = DEFAULT_THRESHOLD) -> Verdict:
    vals = np.asarray(values, dtype=np.float64)
    tail = vals[len(vals) // 2 :]
    decreasing = len(tail) >= 2 and bool(np.all(np.diff(tail) <= 0.0)) and tail[-1] < tail[0]
    small = abs(float(vals[-1])) < threshold
    if decreasing and small:
        return Verdict.CONVERGING
    if not decreasing and not small:
        return Verdict.NOT_CONVERGING
    return Verdict.INCONCLUSIVE


def growth_exponent(ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of log|value| against log n."""
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.abs(np.asarray(values, dtype=np.float64))
    if len(x) < 2 or np.any(y == 0.0):
        return -math.inf if np.all(y == 0.0) else math.nan
    return float(np.polyfit(x, np.log(y), 1)[0])


def order_branch(ns, values, cap: float, s: float) -> str | None:
    """Which growth branch a sequence satisfies, if any.

    ``"bounded"``: |value| < cap at every grid point. ``"O(n^s)"``: over the
    last half of the grid, value / n^s stays in [1/10, 10] and the fitted
    growth exponent does not exceed s + 0.05. The exponent test keeps a
    sequence growing like n from passing on a short grid.
    """
    vals = np.abs(np.asarray(values, dtype=np.float64))
    if np.all(vals < cap):
        return "bounded"
    half = len(ns) // 2
    tail_n = np.asarray(ns[half:], dtype=np.float64)
    tail_v = vals[half:]
    if len(tail_n) >= 2:
        ratio = tail_v / tail_n**s
        slope = growth_exponent(tail_n, tail_v)
        if np.all((ratio >= 1.0 / RATIO_CAP) & (ratio <= RATIO_CAP)) and slope <= s + GROWTH_SLACK:
            return "O(n^s)"
    return None


def _check_grid(n_grid) -> tuple[int, ...]:
    ns = tuple(int(n) for n in n_grid)
    if not ns:
        raise InvalidInput("n grid is empty")
    if ns[0] < 1 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidInput("n grid must be strictly increasing positive integers")
    return ns


def _prefix_moments(process, ns) -> tuple[np.ndarray, np.ndarray]:
    """Per grid point: (1/n) sum Var and (1/n) sum_{i<j} Cov."""
    cov = _cov_matrix(process, ns[-1])
    total = cov.cumsum(axis=0).cumsum(axis=1)
    trace = np.cumsum(np.diag(cov))
    idx = np.asarray(ns) - 1
    narr = np.asarray(ns, dtype=np.float64)
    tr = trace[idx]
    return tr / narr, (total[idx, idx] - tr) / 2.0 / narr


def theorem12_check(
    process: ProcessModel,
    n_grid: Sequence[int],
    cap: float = 1.0,
    s: float = 0.5,
    threshold: float = DEFAULT_THRESHOLD,
) -> LLNDiagnostic:
    """Evaluate the two alternative weak-law conditions along ``n_grid``.

    The diagnostic's values are Var(mean_n). The first condition holds when
    the mean variance (1/n) sum Var goes to 0. The second holds when the mean
    variance and the scaled covariance sum (1/n) sum_{i<j} Cov each pick a
    branch from :func:`order_branch`; each picks independently. A condition
    that holds while Var(mean_n) does not yet look convergent gives
    INCONCLUSIVE.
    """
    if not 0 < s < 1:
        raise InvalidInput(f"exponent must lie in (0, 1), got {s}")
    if not cap > 0:
        raise InvalidInput(f"cap must be > 0, got {cap}")
    ns = _check_grid(n_grid)
    avg_var, avg_cov = _prefix_moments(process, ns)
    narr = np.asarray(ns, dtype=np.float64)
    var_mean = (avg_var + 2.0 * avg_cov) / narr

    vanishing_variance = converges_to_zero(avg_var, threshold) is Verdict.CONVERGING
    var_branch = order_branch(ns, avg_var, cap, s)
    cov_branch = order_branch(ns, avg_cov, cap, s)
    bounded_growth = var_branch is not None and cov_branch is not None

    direct = converges_to_zero(var_mean, threshold)
    if vanishing_variance or bounded_growth:
        verdict = Verdict.CONVERGING if direct is Verdict.CONVERGING else Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.NOT_CONVERGING
    return LLNDiagnostic(
        "Theorem12",
        ns,
        tuple(float(x) for x in var_mean),
        verdict,
        parameters={"C": cap, "s": s, "threshold": threshold},
        details={
            "vanishing_variance": vanishing_variance,
            "bounded_growth": bounded_growth,
            "var_branch": var_branch,
            "cov_branch": cov_branch,
            "mean_variance": tuple(float(x) for x in avg_var),
            "mean_covariance": tuple(float(x) for x in avg_cov),
            "var_of_mean_verdict": direct.value,
        },
    )


def lln_diagnostic(
    process: ProcessModel,
    condition: str,
    n_grid: Sequence[int],
    *,
    s: float | None = None,
    cap: float | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> LLNDiagnostic:
    """Diagnostic for one sufficient condition along ``n_grid``."""
    if condition == "Theorem12":
        return theorem12_check(process, n_grid, cap if cap is not None else 1.0, s if s is not None else 0.5, threshold)
    ns = _check_grid(n_grid)
    bounds = None
    params: dict = {"threshold": threshold}
    if condition == "Markov25":
        values = [markov25_value(process, n) for n in ns]
    elif condition == "Markov28":
        values = [markov28_value(process, n) for n in ns]
    elif condition == "PowerMean30":
        s = 2.0 if s is None else s
        params["s"] = s
        values = [theorem8_condition(process, n, s) for n in ns]
    elif condition == "Theorem9":
        s = 0.5 if s is None else s
        params["s"] = s
        if cap is None:
            cap = float(variances_of(process, ns[-1]).max())
        params["C"] = cap
        pairs = [theorem9_scaled_variance(process, n, s, cap) for n in ns]
        values = [p.value for p in pairs]
        bounds = tuple(p.bound for p in pairs)
    else:
        raise InvalidInput(f"unknown condition {condition!r}; expected one of {CONDITIONS}")
    return LLNDiagnostic(
        condition,
        ns,
        tuple(float(v) for v in values),
        converges_to_zero(values, threshold),
        bounds=bounds,
        parameters=params,
    )


def constant_sequence(variance: float = 1.0) -> UserKernel:
    """X_i = X for all i: every pair perfectly correlated."""
    return UserKernel(lambda i: variance, lambda i, j: variance)
