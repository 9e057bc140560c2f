"""Nonparametric tests and small statistics used by the log analysis.

The rank tests are written out in full rather than delegated so that tie
handling, continuity correction, and the exact small-sample permutation
variants stay pinned to one auditable definition; the test suite checks them
against brute-force enumeration oracles.

The normal approximations carry tie corrections and a continuity correction
clamped at the distribution center. They track the exact permutation p to
within a few hundredths for low-tie data down to the smallest usable sample
sizes; with heavy ties at tiny n the exact p lattice itself is coarser than
that, and the exact methods should be preferred there.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import t as t_dist

from ..errors import (
    AllZeroDifferences,
    EmptySample,
    OutOfRangeItem,
    TooFewPoints,
)

EXACT_U_LIMIT = 8  # min(n, m) at or below this enables the exact method
EXACT_W_LIMIT = 12


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class UResult:
    u: float  # U statistic of the first sample
    p: float  # two-sided
    method: str  # "normal" | "exact"


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float], exact: bool = False) -> UResult:
    """Rank-sum test with midrank ties.

    U is reported for sample_a (number of (a, b) pairs with a > b, ties at
    half weight). The p-value uses the tie-corrected normal approximation
    with continuity correction; `exact=True` switches to full enumeration of
    group assignments when min(n, m) <= 8.
    """
    n, m = len(sample_a), len(sample_b)
    if n == 0 or m == 0:
        raise EmptySample("both samples must be non-empty")
    pooled = list(sample_a) + list(sample_b)
    ranks = _midranks(pooled)
    r_a = sum(ranks[:n])
    u_a = r_a - n * (n + 1) / 2.0

    if exact and min(n, m) <= EXACT_U_LIMIT:
        return UResult(u=u_a, p=_exact_u_p(pooled, n, u_a), method="exact")

    total = n + m
    mu = n * m / 2.0
    tie_term = _tie_sum(pooled)
    sigma_sq = n * m / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    if sigma_sq <= 0:
        return UResult(u=u_a, p=1.0, method="normal")  # everything tied
    # continuity correction, never allowed to carry the deviation past zero
    dev = max(0.0, abs(u_a - mu) - 0.5)
    z = dev / math.sqrt(sigma_sq)
    return UResult(u=u_a, p=min(1.0, 2.0 * _norm_sf(z)), method="normal")


def _tie_sum(pooled: Sequence[float]) -> float:
    counts: dict[float, int] = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    return float(sum(t**3 - t for t in counts.values()))


def _exact_u_p(pooled: Sequence[float], n: int, u_obs: float) -> float:
    """Two-sided exact p by enumerating which observations form sample A.

    The permutation distribution of U is symmetric about n*m/2 even with
    ties, so two-sided means |U - nm/2| at least as large as observed."""
    total = len(pooled)
    m = total - n
    ranks = _midranks(pooled)
    center = n * m / 2.0
    obs_dev = abs(u_obs - center) - 1e-9
    hits = 0
    count = 0
    base = n * (n + 1) / 2.0
    for combo in itertools.combinations(range(total), n):
        u = sum(ranks[i] for i in combo) - base
        count += 1
        if abs(u - center) >= obs_dev:
            hits += 1
    return hits / count


@dataclass(frozen=True)
class WResult:
    w: float  # min of the signed-rank sums
    p: float  # two-sided
    n_nonzero: int
    method: str


def wilcoxon_signed_rank(differences: Sequence[float], exact: bool = False) -> WResult:
    """Signed-rank test on paired differences; zeros are dropped.

    W is the smaller of the positive/negative rank sums. Normal
    approximation with tie correction and continuity correction; `exact=True`
    enumerates all sign assignments when the nonzero count is <= 12.
    """
    diffs = [d for d in differences if d != 0.0]
    if not diffs:
        raise AllZeroDifferences("every paired difference is zero")
    n = len(diffs)
    ranks = _midranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    w = min(w_plus, w_minus)

    if exact and n <= EXACT_W_LIMIT:
        return WResult(w=w, p=_exact_w_p(ranks, w), n_nonzero=n, method="exact")

    mu = n * (n + 1) / 4.0
    tie_term = _tie_sum([abs(d) for d in diffs]) / 48.0
    sigma_sq = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if sigma_sq <= 0:
        return WResult(w=w, p=1.0, n_nonzero=n, method="normal")
    # W = min(W+, W-) <= mu; continuity correction clamped at the center
    dev = max(0.0, mu - w - 0.5)
    z = dev / math.sqrt(sigma_sq)
    return WResult(w=w, p=min(1.0, 2.0 * _norm_sf(z)), n_nonzero=n, method="normal")


def _exact_w_p(ranks: Sequence[float], w_obs: float) -> float:
    """P(min(W+, W-) <= observed) over all 2^n sign assignments."""
    n = len(ranks)
    total_rank = sum(ranks)
    hits = 0
    count = 1 << n
    for bits in range(count):
        w_plus = 0.0
        for i in range(n):
            if bits >> i & 1:
                w_plus += ranks[i]
        if min(w_plus, total_rank - w_plus) <= w_obs + 1e-9:
            hits += 1
    return hits / count


def learning_slope(times: Sequence[float]) -> float:
    """Ordinary least-squares slope of time versus attempt index 0..n-1."""
    n = len(times)
    if n < 2:
        raise TooFewPoints(f"need at least 2 attempts, got {n}")
    mean_x = (n - 1) / 2.0
    mean_y = sum(times) / n
    num = sum((i - mean_x) * (y - mean_y) for i, y in enumerate(times))
    den = sum((i - mean_x) ** 2 for i in range(n))
    return num / den


def trim_outliers(values: Sequence[float], fraction: float = 0.05) -> list[float]:
    """Drop the ceil(fraction * n) values farthest from the median (absolute
    deviation); ties are broken by removing the earliest index first. The
    survivors keep their original order."""
    if not 0 <= fraction < 0.5:
        raise ValueError("fraction must be in [0, 0.5)")
    n = len(values)
    n_remove = math.ceil(fraction * n) if fraction > 0 else 0
    if n_remove == 0:
        return list(values)
    med = _median(values)
    by_deviation = sorted(range(n), key=lambda i: (-abs(values[i] - med), i))
    dropped = set(by_deviation[:n_remove])
    return [v for i, v in enumerate(values) if i not in dropped]


def _median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def sus_score(items: Sequence[int]) -> float:
    """Standard usability scale score in [0, 100] from ten 1..5 items."""
    if len(items) != 10:
        raise OutOfRangeItem(f"expected 10 items, got {len(items)}")
    total = 0
    for i, item in enumerate(items):
        if not isinstance(item, int) or isinstance(item, bool) or not 1 <= item <= 5:
            raise OutOfRangeItem(f"item {i + 1} out of range: {item!r}")
        total += (item - 1) if i % 2 == 0 else (5 - item)
    return total * 2.5


def paired_t(differences: Sequence[float]) -> tuple[float, float]:
    """Paired t statistic and two-sided p for a list of differences."""
    n = len(differences)
    if n < 2:
        raise TooFewPoints("need at least 2 pairs")
    mean = sum(differences) / n
    var = sum((d - mean) ** 2 for d in differences) / (n - 1)
    if var == 0:
        return (math.inf if mean > 0 else -math.inf if mean < 0 else 0.0), (0.0 if mean else 1.0)
    t = mean / math.sqrt(var / n)
    p = 2.0 * float(t_dist.sf(abs(t), df=n - 1))
    return t, p
