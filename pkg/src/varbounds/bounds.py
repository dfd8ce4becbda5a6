"""Exact variance of a weighted sum and its upper bounds.

Bound tags
----------
T1       sum(a_i v_i), simplex weights
T1prime  (sum a_i^2)(sum v_i), simplex weights
T3       sum(a_i v_i), weights in [0, 1] with 0 < sum < 1
T4       (sum a_i)(sum a_i v_i), non-negative weights
T5       (sum |a_i|)(sum |a_i| v_i), any weights
C2chain  (sum|a|)(sum|a| v) <= sum|a| v <= sum v, when sum|a| <= 1
C3chain  sum a^2 v <= sum|a| v <= sum v, uncorrelated and all |a_i| <= 1
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInput, InvariantViolation, NotApplicable
from .model import (
    CovarianceModel,
    PSD_REL_TOL,
    VarianceProfile,
    WeightClass,
    WeightVector,
    as_profile,
    as_weights,
    load_instance,
)

SLACK_TOL = 1e-9
MINOR_TOL = 1e-12
MINOR_XCHECK_TOL = 1e-10
EXHAUSTIVE_MAX_N = 12
XCHECK_MAX_K = 5

TAGS = ("T1", "T1prime", "T3", "T4", "T5", "C2chain", "C3chain")


def _check_dims(weights: WeightVector, n: int) -> None:
    if len(weights) != n:
        raise InvalidInput(f"{len(weights)} weights for {n} variables")


def variance_scale(weights, model: CovarianceModel) -> float:
    """Natural magnitude of the quadratic form, (sum |a_i| sigma_i)^2."""
    a = as_weights(weights).array
    return float(np.dot(np.abs(a), model.profile.sigmas)) ** 2


def exact_variance(weights, model: CovarianceModel) -> float:
    """Var(sum a_i X_i) = sum a_i^2 v_i + 2 sum_{i<j} a_i a_j rho_ij s_i s_j.

    Values within ``SLACK_TOL * scale`` below zero are clamped to 0. Larger
    negative values can only come from a hypothetical (non-PSD) model and are
    returned unchanged.
    """
    w = as_weights(weights)
    _check_dims(w, model.n)
    a = w.array
    value = float(a @ model.covariance @ a)
    scale = variance_scale(w, model)
    if -SLACK_TOL * scale <= value < 0.0:
        value = 0.0
    return value


def bound_theorem1(weights, profile) -> float:
    """sum a_i v_i for simplex or sub-simplex weights."""
    w, p = as_weights(weights), as_profile(profile)
    _check_dims(w, len(p))
    if w.weight_class not in (WeightClass.SIMPLEX, WeightClass.SUB_SIMPLEX):
        raise NotApplicable(f"sum(a_i v_i) bound needs simplex or sub-simplex weights, got {w.weight_class.value}")
    return math.fsum(w.array * p.variances)


def bound_theorem1prime(weights, profile) -> float:
    w, p = as_weights(weights), as_profile(profile)
    _check_dims(w, len(p))
    if w.weight_class is not WeightClass.SIMPLEX:
        raise NotApplicable(f"(sum a^2)(sum v) bound needs simplex weights, got {w.weight_class.value}")
    return math.fsum(w.array**2) * math.fsum(p.variances)


def bound_theorem4(weights, profile) -> float:
    w, p = as_weights(weights), as_profile(profile)
    _check_dims(w, len(p))
    if not w.weight_class.non_negative:
        raise NotApplicable("(sum a)(sum a v) bound needs non-negative weights")
    a = w.array
    return math.fsum(a) * math.fsum(a * p.variances)


def bound_theorem5(weights, profile) -> float:
    w, p = as_weights(weights), as_profile(profile)
    _check_dims(w, len(p))
    a = np.abs(w.array)
    return math.fsum(a) * math.fsum(a * p.variances)


@dataclass(frozen=True)
class BoundEntry:
    value: float
    applicable: bool
    slack: float | None = None
    chain: tuple[float, ...] | None = None


@dataclass(frozen=True)
class BoundReport:
    exact: float
    bounds: dict
    weight_class: WeightClass
    hypothetical: bool = False
    chain_violations: tuple = field(default=())

    @property
    def tolerance(self) -> float:
        return SLACK_TOL * max(1.0, self.exact)

    def violations(self) -> list[str]:
        """Tags whose applicable bound falls below the exact variance.

        Dominance is not asserted for hypothetical models.
        """
        if self.hypothetical:
            return []
        bad = [
            tag
            for tag, entry in self.bounds.items()
            if entry.applicable and entry.slack is not None and entry.slack < -self.tolerance
        ]
        return bad + [f"{tag}:order" for tag in self.chain_violations]

    @property
    def ok(self) -> bool:
        return not self.violations()

    def check(self) -> "BoundReport":
        bad = self.violations()
        if bad:
            raise InvariantViolation(f"bounds violated: {', '.join(bad)} (exact={self.exact!r})")
        return self

    def to_dict(self) -> dict:
        return {
            "exact": self.exact,
            "weight_class": self.weight_class.value,
            "hypothetical": self.hypothetical,
            "bounds": {
                tag: {
                    "value": e.value,
                    "applicable": e.applicable,
                    "slack": e.slack,
                    **({"chain": list(e.chain)} if e.chain is not None else {}),
                }
                for tag, e in self.bounds.items()
            },
            "violations": self.violations(),
        }


def _ordered(chain: Sequence[float], tol: float) -> bool:
    return all(lo <= hi + tol for lo, hi in zip(chain, chain[1:]))


def bound_report(weights, model: CovarianceModel) -> BoundReport:
    w = as_weights(weights)
    _check_dims(w, model.n)
    p = model.profile
    exact = exact_variance(w, model)
    cls = w.weight_class
    a = w.array
    abs_a = np.abs(a)
    v = p.variances
    tol = SLACK_TOL * max(1.0, exact)

    weighted = math.fsum(a * v)
    abs_weighted = math.fsum(abs_a * v)
    total_var = math.fsum(v)
    t5 = bound_theorem5(w, p)

    def entry(value, applicable, chain=None):
        slack = value - exact if applicable else None
        return BoundEntry(value, applicable, slack, chain)

    bounds = {
        "T1": entry(weighted, cls is WeightClass.SIMPLEX),
        "T1prime": entry(math.fsum(a**2) * total_var, cls is WeightClass.SIMPLEX),
        "T3": entry(weighted, cls is WeightClass.SUB_SIMPLEX),
        "T4": entry(math.fsum(a) * weighted, cls.non_negative),
        "T5": entry(t5, True),
    }

    chain_bad = []
    c2_ok = w.abs_sum <= 1.0 + 1e-12
    c2_chain = (t5, abs_weighted, total_var)
    bounds["C2chain"] = entry(t5, c2_ok, c2_chain if c2_ok else None)
    if c2_ok and not _ordered(c2_chain, tol):
        chain_bad.append("C2chain")

    c3_ok = model.uncorrelated and bool(np.all(abs_a <= 1.0))
    c3_chain = (math.fsum(a**2 * v), abs_weighted, total_var)
    bounds["C3chain"] = entry(abs_weighted, c3_ok, c3_chain if c3_ok else None)
    if c3_ok and not _ordered(c3_chain, tol):
        chain_bad.append("C3chain")

    return BoundReport(
        exact=exact,
        bounds=bounds,
        weight_class=cls,
        hypothetical=model.hypothetical,
        chain_violations=tuple(chain_bad),
    )


def _pair_instance(a1, a2, rho) -> dict:
    return {"weights": [a1, a2], "variances": [1, 1], "correlation": [[1, rho], [rho, 1]]}


_HALF, _THIRD = Fraction(1, 2), Fraction(1, 3)

# unit-variance pairs at rho = +-1 or 0: the bounds are attained or the variance vanishes
TIGHT_CASES = {
    "aligned-unit": _pair_instance(1, 1, 1),
    "aligned-half": _pair_instance(_HALF, _HALF, 1),
    "aligned-half-third": _pair_instance(_HALF, _THIRD, 1),
    "opposed-unit": _pair_instance(1, 1, -1),
    "opposed-half": _pair_instance(_HALF, _HALF, -1),
    "uncorrelated-half": _pair_instance(_HALF, _HALF, 0),
}


def tight_case(name: str) -> tuple[WeightVector, CovarianceModel]:
    if name not in TIGHT_CASES:
        raise InvalidInput(f"unknown fixture {name!r}; expected one of {sorted(TIGHT_CASES)}")
    return load_instance(TIGHT_CASES[name])


def weight_gram_complement(weights) -> np.ndarray:
    """The matrix A = diag(a) - a a^T."""
    a = as_weights(weights).array
    return np.diag(a) - np.outer(a, a)


def _check_subset(subset: Iterable[int], n: int) -> tuple[int, ...]:
    idx = tuple(sorted(int(i) for i in subset))
    if not idx:
        raise InvalidInput("subset must be non-empty")
    if len(set(idx)) != len(idx):
        raise InvalidInput(f"repeated index in subset {idx}")
    if idx[0] < 0 or idx[-1] >= n:
        raise InvalidInput(f"subset {idx} out of range for n={n}")
    return idx


def _closed_minor(a: np.ndarray, idx) -> float:
    sub = a[list(idx)]
    return float(math.prod(sub) * (1.0 - math.fsum(sub)))


def _relative_gap(a: np.ndarray, A: np.ndarray, idx) -> float:
    closed = _closed_minor(a, idx)
    det = float(np.linalg.det(A[np.ix_(idx, idx)]))
    scale = max(abs(closed), abs(det), math.prod(abs(a[i]) for i in idx))
    return abs(closed - det) / scale if scale else 0.0


def principal_minor(weights, subset: Iterable[int]) -> float:
    """Closed-form principal minor of A on ``subset`` (0-based indices).

    det A[S, S] = (prod_{i in S} a_i) * (1 - sum_{i in S} a_i)
    """
    w = as_weights(weights)
    return _closed_minor(w.array, _check_subset(subset, len(w)))


def direct_minor(weights, subset: Iterable[int]) -> float:
    """Principal minor of A on ``subset`` by LU determinant."""
    w = as_weights(weights)
    idx = list(_check_subset(subset, len(w)))
    A = weight_gram_complement(w)
    return float(np.linalg.det(A[np.ix_(idx, idx)]))


def minor_agreement(weights, subset) -> float:
    """Relative gap between the closed form and the LU determinant.

    Normalized by max(|closed|, |det|, prod |a_i|) so that minors that vanish
    because sum a_i = 1 are judged against the size of the product factor.
    """
    w = as_weights(weights)
    idx = list(_check_subset(subset, len(w)))
    return _relative_gap(w.array, weight_gram_complement(w), idx)


class PsdVerdict(NamedTuple):
    psd: bool
    method: str
    witness: tuple | np.ndarray | None = None
    min_value: float = 0.0
    xcheck_max_rel_err: float = 0.0

    def __bool__(self) -> bool:
        return self.psd


def check_A_psd(weights) -> PsdVerdict:
    """Decide whether A = diag(a) - a a^T is positive semidefinite.

    For n <= 12 every principal minor is evaluated with the closed form; the
    first subset below ``-MINOR_TOL`` is the witness. Larger n falls back to
    eigenvalues with a relative tolerance, and the witness is the offending
    eigenvector. In both cases the closed form is checked against a direct
    determinant for every subset of size <= 5; a mismatch beyond
    ``MINOR_XCHECK_TOL`` raises :class:`InvariantViolation`.
    """
    w = as_weights(weights)
    a = w.array
    n = a.size
    A = weight_gram_complement(w)
    worst_err = 0.0
    for k in range(1, min(XCHECK_MAX_K, n) + 1):
        for subset in itertools.combinations(range(n), k):
            err = _relative_gap(a, A, subset)
            worst_err = max(worst_err, err)
            if err > MINOR_XCHECK_TOL:
                raise InvariantViolation(f"minor closed form disagrees with det on {subset}: rel err {err:.3e}")

    if n <= EXHAUSTIVE_MAX_N:
        min_value = math.inf
        for k in range(1, n + 1):
            for subset in itertools.combinations(range(n), k):
                m = _closed_minor(a, subset)
                min_value = min(min_value, m)
                if m < -MINOR_TOL:
                    return PsdVerdict(False, "minors", subset, m, worst_err)
        return PsdVerdict(True, "minors", None, min_value, worst_err)

    eig, vecs = np.linalg.eigh(A)
    lo, hi = float(eig[0]), float(eig[-1])
    if lo < -PSD_REL_TOL * max(abs(hi), abs(lo), 1e-300):
        return PsdVerdict(False, "eigen", vecs[:, 0].copy(), lo, worst_err)
    return PsdVerdict(True, "eigen", None, lo, worst_err)


class CovarianceSumBounds(NamedTuple):
    lower: float
    upper: float
    actual: float

    @property
    def holds(self) -> bool:
        tol = SLACK_TOL * max(1.0, abs(self.lower), abs(self.upper))
        return self.lower - tol <= self.actual <= self.upper + tol


def covariance_sum_bounds(model: CovarianceModel) -> CovarianceSumBounds:
    """Sandwich -(1/n) sum v <= (2/n) sum_{i<j} Cov <= (1 - 1/n) sum v."""
    n = model.n
    if n < 2:
        raise InvalidInput("covariance sum needs n >= 2")
    cov = model.covariance
    upper_tri = cov[np.triu_indices(n, k=1)]
    actual = 2.0 / n * math.fsum(upper_tri)
    total = math.fsum(model.profile.variances)
    result = CovarianceSumBounds(-total / n, (1.0 - 1.0 / n) * total, actual)
    if not model.hypothetical and not result.holds:
        raise InvariantViolation(f"covariance sum {actual!r} outside [{result.lower!r}, {result.upper!r}]")
    return result
