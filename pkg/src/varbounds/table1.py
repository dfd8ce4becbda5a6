"""Enumeration comparing sum(a_i v_i) against (sum a_i^2)(sum v_i) on a grid.

Weights are tenths a_i/10 with a_i in 1..10 summing to 10 (ordered
compositions); variances are tenths b_i/10 with b_i in 1..20. A case is a
violation when sum(a_i v_i) > (sum a_i^2)(sum v_i) strictly.

Two arithmetics are offered.

``exact``
    Multiplying both sides by 1000 clears every denominator::

        sum(a_i b_i)/100 > (sum a_i^2 / 100)(sum b_i / 10)
        <=>  10 * sum(a_i b_i) > (sum a_i^2) * (sum b_i)

    and the comparison runs on integers only.

``float``
    Replays the double-precision procedure behind the reference counts:
    grid values come from a colon-style range (filled symmetrically from both
    ends), the last weight is the residual ``1 - sum(others)``, and every sum
    is accumulated left to right. Near-ties then resolve by rounding, which
    is why this mode counts a few more violations than ``exact``. With
    ``include_ghosts`` it also keeps head tuples whose tenths already sum to
    10 but whose float residual is a tiny positive number (~1.1e-16); that
    reproduces the reference totals, which are not grid compositions.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, InvariantViolation

WEIGHT_STEPS = 10
VARIANCE_STEPS = 20
_MAX_BLOCK_ROWS = 1 << 20

# reference (total, violations, ratio %) for the default grid
REFERENCE_ROWS = {
    2: (3600, 520, "14.44"),
    3: (288000, 29137, "10.11"),
    4: (13760000, 799763, "5.81"),
}


@dataclass(frozen=True)
class GridSpec:
    n: int
    variance_steps: int = VARIANCE_STEPS
    weight_steps: int = field(default=WEIGHT_STEPS, init=False)

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInput(f"n must be >= 2, got {self.n}")
        if self.variance_steps < 1:
            raise InvalidInput("variance grid needs at least one point")

    @property
    def compositions(self) -> int:
        k = self.n - 1
        return math.comb(self.weight_steps - 1, k) if k <= self.weight_steps - 1 else 0

    @property
    def total_cases(self) -> int:
        return self.compositions * self.variance_steps**self.n


@dataclass(frozen=True)
class Table1Row:
    n: int
    total_cases: int
    violation_cases: int
    arithmetic: str = "float"
    notes: tuple = ()

    def __post_init__(self):
        if not 0 <= self.violation_cases <= self.total_cases:
            raise InvalidInput("violation count out of range")

    @property
    def ratio(self) -> float:
        """Violation share in percent."""
        return 100.0 * self.violation_cases / self.total_cases if self.total_cases else 0.0

    @property
    def ratio_text(self) -> str:
        """Percent truncated (not rounded) to two decimals, like the reference table."""
        if not self.total_cases:
            return "0.00"
        q = 10000 * self.violation_cases // self.total_cases
        return f"{q // 100}.{q % 100:02d}"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "total": self.total_cases,
            "violations": self.violation_cases,
            "ratio_percent": self.ratio,
            "arithmetic": self.arithmetic,
            "notes": list(self.notes),
        }


def enumerate_weight_compositions(n: int, total: int = WEIGHT_STEPS) -> list[tuple[int, ...]]:
    """All (a_1..a_n) with a_i >= 1 and sum ``total``, in lexicographic order."""
    if n < 2:
        raise InvalidInput(f"n must be >= 2, got {n}")
    if n > total:
        return []
    # cut points of a stars-and-bars layout; lex order of cuts = lex order of parts
    return [
        tuple(b - a for a, b in zip((0,) + cuts, cuts + (total,)))
        for cuts in itertools.combinations(range(1, total), n - 1)
    ]


def colon_range(start: float, step: float, stop: float) -> list[float]:
    """``start:step:stop`` filled symmetrically from both ends."""
    count = round((stop - start) / step)
    out = [0.0] * (count + 1)
    for k in range(count // 2 + 1):
        out[k] = start + k * step
        out[count - k] = stop - k * step
    if count % 2 == 0:
        out[count // 2] = (start + stop) / 2
    return out


def _sequential_sum(xs) -> float:
    total = 0.0
    for x in xs:
        total += x
    return total


def residual_weights(heads: tuple[int, ...]) -> tuple[float, ...]:
    """Float weights for head tenths, with the last weight as the residual."""
    grid = colon_range(0.1, 0.1, 1.0)
    head = tuple(grid[k - 1] for k in heads)
    return head + (1.0 - _sequential_sum(head),)


def ghost_weight_tuples(n: int) -> list[tuple[float, ...]]:
    """Float tuples whose heads already use all 10 tenths but leave a residual > 0."""
    out = []
    for heads in enumerate_weight_compositions(n - 1) if n >= 3 else []:
        w = residual_weights(heads)
        if w[-1] > 0.0:
            out.append(w)
    return out


def _tail_grid(width: int, steps: int) -> np.ndarray:
    return np.array(list(itertools.product(range(1, steps + 1), repeat=width)), dtype=np.int64).reshape(-1, width)


def _variance_blocks(n: int, steps: int):
    """Yield the full tenths grid 1..steps per coordinate as int64 row blocks."""
    lead = 0
    while steps ** (n - lead) > _MAX_BLOCK_ROWS and lead < n:
        lead += 1
    tail = _tail_grid(n - lead, steps)
    for prefix in itertools.product(range(1, steps + 1), repeat=lead):
        block = np.empty((tail.shape[0], n), dtype=np.int64)
        block[:, :lead] = prefix
        block[:, lead:] = tail
        yield block


def _count_exact(comps: list[tuple[int, ...]], n: int, steps: int) -> int:
    a = np.array(comps, dtype=np.int64).reshape(-1, n)
    sq = (a * a).sum(axis=1)
    count = 0
    for b in _variance_blocks(n, steps):
        lhs = 10 * (b @ a.T)
        rhs = np.outer(b.sum(axis=1), sq)
        count += int(np.count_nonzero(lhs > rhs))
    return count


def _count_float(weights: list[tuple[float, ...]], n: int, steps: int) -> int:
    vgrid = np.array(colon_range(0.1, 0.1, steps / 10.0))
    count = 0
    for b in _variance_blocks(n, steps):
        v = vgrid[b - 1]
        vsum = v[:, 0].copy()
        for i in range(1, n):
            vsum = vsum + v[:, i]
        for w in weights:
            lhs = w[0] * v[:, 0]
            for i in range(1, n):
                lhs = lhs + w[i] * v[:, i]
            sq = _sequential_sum(x * x for x in w)
            count += int(np.count_nonzero(lhs > sq * vsum))
    return count


def _partition(items: list, parts: int) -> list[list]:
    parts = max(1, min(parts, len(items)))
    return [items[k::parts] for k in range(parts)]


def run_table1(
    n: int,
    arithmetic: str = "float",
    *,
    include_ghosts: bool = False,
    variance_steps: int = VARIANCE_STEPS,
    workers: int = 1,
    reverse: bool = False,
) -> Table1Row:
    """Count violation cases over the full grid for ``n`` variables."""
    spec = GridSpec(n, variance_steps)
    comps = enumerate_weight_compositions(n)
    if reverse:
        comps = comps[::-1]
    if arithmetic == "exact":
        if include_ghosts:
            raise InvalidInput("ghost tuples only exist in float arithmetic")
        items, counter = comps, _count_exact
    elif arithmetic == "float":
        items = [residual_weights(c[:-1]) for c in comps]
        if include_ghosts:
            items += ghost_weight_tuples(n)
        counter = _count_float
    else:
        raise InvalidInput(f"unknown arithmetic {arithmetic!r}; expected 'float' or 'exact'")

    chunks = [c for c in _partition(items, workers) if c]
    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            violations = sum(pool.map(lambda c: counter(c, n, variance_steps), chunks))
    else:
        violations = counter(items, n, variance_steps) if items else 0

    total = len(items) * variance_steps**n
    if not include_ghosts and total != spec.total_cases:
        raise InvariantViolation(f"case count {total} != grid count {spec.total_cases}")
    return Table1Row(n, total, violations, arithmetic, discrepancy_notes(n, total, variance_steps))


def discrepancy_notes(n: int, total: int, variance_steps: int = VARIANCE_STEPS) -> tuple[str, ...]:
    ref = REFERENCE_ROWS.get(n)
    if ref is None or variance_steps != VARIANCE_STEPS or ref[0] == total:
        return ()
    ghosts = ghost_weight_tuples(n)
    spec = GridSpec(n, variance_steps)
    per = variance_steps**n
    return (
        f"reference total {ref[0]} = {ref[0] // per} weight tuples x {per}; "
        f"the grid has {spec.compositions} compositions ({spec.total_cases} cases). "
        f"The {len(ghosts)} extra tuples have a float residual last weight of "
        f"{ghosts[0][-1]:.3g} and lie off the grid; counts here use the grid."
        if ghosts
        else f"reference total {ref[0]} differs from the grid total {total}",
    )


def table1_report(n: int, *, variance_steps: int = VARIANCE_STEPS, workers: int = 1) -> dict:
    """Float row, exact row and the reference values side by side."""
    flt = run_table1(n, "float", variance_steps=variance_steps, workers=workers)
    exact = run_table1(n, "exact", variance_steps=variance_steps, workers=workers)
    ref = REFERENCE_ROWS.get(n) if variance_steps == VARIANCE_STEPS else None
    return {
        "float": flt,
        "exact": exact,
        "reference": None if ref is None else {"total": ref[0], "violations": ref[1], "ratio_percent": ref[2]},
        "float_minus_exact": flt.violation_cases - exact.violation_cases,
    }
