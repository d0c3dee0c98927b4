"""Parameter couplings: the Poisson-coupling formula and monotone root finding.

theta_for_mean inverts the strictly increasing map theta -> mean of
KB(n, theta, q) by bisection over the bracket [0, q^(-n+1)]; the upper
endpoint already pushes the mean to n/2, so a root exists whenever n >= 2 mu.
The bracket is carried in ScaledReal form because q^(-n+1) overflows floats
well inside desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import Heine, KempBinomial, heine_mean, kb_moments
from .qcalc import ScaledReal, as_qbase, q_number

__all__ = [
    "BracketError",
    "ThetaSolveResult",
    "theta_for_mean",
    "theta_for_poisson",
    "theta_limit_for_mean",
]

RESIDUAL_TARGET = 1e-12

# Bisection iteration cap. Collapsing the initial bracket [0, q^(-n+1)] to
# float resolution takes about n log2(1/q) + 60 steps: ~966 at the grid corner
# (q = 0.2, n = 400), so 64 only covers small n.
MAX_ITERATIONS = 1024


class BracketError(ValueError):
    """Requested mean is not bracketed (needs n >= 2 mu)."""


@dataclass(frozen=True)
class ThetaSolveResult:
    theta: float
    residual: float
    iterations: int


def theta_for_poisson(n: int, q, lam: float) -> float:
    """Shape theta = lambda / [n - lambda]_q of the Poisson-coupling sequence."""
    q = as_qbase(q)
    if not 0.0 < lam < n:
        raise ValueError(f"lambda must satisfy 0 < lambda < n, got lambda={lam}, n={n}")
    return lam / q_number(n - lam, q)


def _bisect(evaluate, lo: ScaledReal, hi: ScaledReal, mu: float) -> ThetaSolveResult:
    """Bisection for evaluate(theta) = mu, evaluate increasing, root in [lo, hi].

    Runs until the bracket collapses to adjacent representable values (the
    residual then sits far below the 1e-12 target; the n-monotonicity of the
    roots is resolvable only at full precision, since consecutive roots differ
    by O(q^n)).
    """
    best_theta, best_res = lo, math.inf
    iterations = 0
    for _ in range(MAX_ITERATIONS):
        mid = (lo + hi) * 0.5
        if mid == lo or mid == hi:
            break
        iterations += 1
        value = evaluate(mid)
        res = abs(value - mu)
        if res < best_res:
            best_theta, best_res = mid, res
        if res == 0.0:
            break
        if value < mu:
            lo = mid
        else:
            hi = mid
    return ThetaSolveResult(best_theta.to_float(), best_res, iterations)


def theta_for_mean(n: int, q, mu: float) -> ThetaSolveResult:
    """Unique theta with mean of KB(n, theta, q) equal to mu (needs n >= 2 mu)."""
    q = as_qbase(q)
    if not mu > 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    if n < 2 * mu:
        raise BracketError(f"need n >= 2 mu for a bracketed root, got n={n}, mu={mu}")

    def evaluate(theta: ScaledReal) -> float:
        return kb_moments(KempBinomial(n, theta, q)).mean

    lo = ScaledReal.zero(q)
    hi = ScaledReal.one(q).q_shift(-(n - 1))  # q^(-n+1), where the mean is >= n/2
    return _bisect(evaluate, lo, hi, mu)


def theta_limit_for_mean(q, mu: float) -> ThetaSolveResult:
    """Limit theta(q) of the constant-mean sequence: solves mean of H(theta) = mu."""
    q = as_qbase(q)
    if not mu > 0.0:
        raise ValueError(f"mu must be positive, got {mu}")

    def evaluate(theta: ScaledReal) -> float:
        return heine_mean(Heine(theta.to_float(), q))

    lo = ScaledReal.zero(q)
    hi = ScaledReal.from_float(max(1.0, mu * (1.0 - q.value)), q)
    while evaluate(hi) < mu:
        hi = hi * 2.0
    return _bisect(evaluate, lo, hi, mu)
