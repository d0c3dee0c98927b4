"""Asymptotics of the KB mean for sub-exponentially growing shape parameters.

Implements the O(1) mean-shift constant c(beta, q) in both of its
representations (bilateral geometric series and Fourier/residue series), the
mean expansion mu_n ~ f(n) + c with an explicit error bound, the limiting
variance series, and the discrete-normal limit laws reached along
subsequences with constant fractional part beta = {f(n)}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import PMFTable
from .qcalc import QBase, as_qbase, e_q, sigmoid

__all__ = [
    "ConsistencyError",
    "DriftRangeError",
    "FractionalDrift",
    "LimitLaw",
    "MeanAsymptotics",
    "c_direct",
    "c_fourier",
    "default_fourier_terms",
    "dnorm_alpha",
    "floor_case",
    "limit_law",
    "mean_expansion",
    "sigma_limit",
]

# Half-width of the limit-law lattice window; the q^((|x|-2)^2/2) tail keeps
# the dropped mass under 1e-15 for q <= 0.9.
LATTICE_HALF_WIDTH = 50


class DriftRangeError(ValueError):
    """f(n) escaped the open interval (0, n)."""


class ConsistencyError(RuntimeError):
    """A computed quantity contradicts a theorem it must satisfy (numerics bug)."""


@dataclass(frozen=True)
class FractionalDrift:
    """Drift f(n) = slope * n + offset with an exact rational slope.

    The rational slope makes the fractional part {f(n)} exactly periodic in n
    (period = slope.denominator), so case splits at beta = 0 and beta = 1/2
    never hinge on floating-point subtraction.
    """

    slope: Fraction
    offset: float = 0.0

    def __post_init__(self):
        s = Fraction(self.slope)
        if not 0 < s < 1:
            raise ValueError(f"slope must satisfy 0 < slope < 1, got {s}")
        object.__setattr__(self, "slope", s)
        object.__setattr__(self, "offset", float(self.offset))

    def value(self, n: int) -> float:
        return float(self.slope * n) + self.offset

    def beta_fraction(self, n: int) -> Fraction:
        """Exact fractional part of f(n) as a Fraction."""
        t = Fraction(self.slope.numerator * n % self.slope.denominator,
                     self.slope.denominator) + Fraction(self.offset)
        return t - math.floor(t)

    def beta(self, n: int) -> float:
        return float(self.beta_fraction(n))


@dataclass(frozen=True)
class MeanAsymptotics:
    """One evaluation of the mean expansion mu_n ~ f(n) + c({f(n)}, q)."""

    f_value: float
    beta: float
    c_value: float
    estimate: float
    error_bound: float
    terms_used: int


@dataclass(frozen=True, eq=False)
class LimitLaw:
    """Limit of (X_n - mu_n)/sigma_n along a constant-beta subsequence.

    lattice_probs lives on the integer lattice of X_n - shift(mu_n); sigma is
    the limiting standard deviation, delta the case selector floor(beta + c).
    The normalized lattice point for integer x is position(x).
    """

    beta: float
    q: QBase
    sigma: float
    delta: int
    c_value: float
    lattice_probs: PMFTable

    def position(self, x: int) -> float:
        """Location -(beta + c - delta)/sigma + x/sigma of lattice point x."""
        return (x - (self.beta + self.c_value - self.delta)) / self.sigma


def _beta_float(beta) -> float:
    b = float(beta)
    if not 0.0 <= b < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta!r}")
    return b


def c_direct(beta, q) -> float:
    """Mean-shift constant c(beta, q) from its bilateral series form.

    c = 1 - 1/(1+q^-beta) - beta - sum_{l>=0} 1/(1+q^(-l-beta-1))
        + sum_{l>=0} 1/(1+q^(-l+beta-1)),
    truncated once the geometric terms drop below 1e-16 * (1-q), which keeps
    the dropped tail under 1e-15.
    """
    b = _beta_float(beta)
    q = as_qbase(q)
    lq = q.log
    count = int(math.ceil((math.log(1e-16) + math.log(1.0 - q.value)) / lq)) + 3
    l = np.arange(count)
    # 1/(1+q^a) = 1/(1+exp(a log q)), with a = -(l+beta+1) and a = -(l+1-beta)
    down = 1.0 / (1.0 + np.exp(-(l + b + 1.0) * lq))
    up = 1.0 / (1.0 + np.exp(-(l + 1.0 - b) * lq))
    return math.fsum(
        [1.0, -sigmoid(b * lq), -b, -math.fsum(down.tolist()), math.fsum(up.tolist())]
    )


def default_fourier_terms(q) -> int:
    """Enough residue terms that the next one is below ~1e-16."""
    q = as_qbase(q)
    return max(3, math.ceil(-q.log * 40.0 / (2.0 * math.pi**2)) + 2)


def c_fourier(f_value: float, q, terms: int) -> float:
    """Residue-series form: 1/2 + sum_k 2 pi sin(2 k f pi)/(log q sinh(2 k pi^2/log q)).

    The sine argument uses the fractional part of f (the series is 1-periodic),
    so integer f yields exactly 1/2. Coefficients decay like exp(-2 k pi^2 /
    |log q|); for large arguments sinh is replaced by exp/2 to avoid overflow.
    """
    if terms < 1:
        raise ValueError(f"terms must be positive, got {terms}")
    q = as_qbase(q)
    frac = f_value - math.floor(f_value)
    alq = -q.log
    parts = [0.5]
    for k in range(1, terms + 1):
        a = 2.0 * k * math.pi**2 / alq
        if a > 35.0:
            coef = 4.0 * math.pi / alq * (math.exp(-a) if a < 745.0 else 0.0)
        else:
            coef = 2.0 * math.pi / (alq * math.sinh(a))
        parts.append(coef * math.sin(2.0 * k * frac * math.pi))
    return math.fsum(parts)


# Empirical O-constant for the expansion's error term; validated over the
# acceptance grid, not claimed as a theorem.
def _error_constant(q: QBase) -> float:
    return 10.0 / (1.0 - q.value)


def mean_expansion(n: int, drift: FractionalDrift, q, terms: int | None = None) -> MeanAsymptotics:
    """Asymptotic mean of KB(n, q^-f(n), q): f(n) + c({f(n)}, q).

    error_bound = 10/(1-q) * q^min(f/2, n-f) mirrors the residue-analysis
    remainder; requires 0 < f(n) < n.
    """
    q = as_qbase(q)
    f = drift.value(n)
    if not 0.0 < f < n:
        raise DriftRangeError(f"f({n}) = {f} outside (0, {n})")
    if terms is None:
        terms = default_fourier_terms(q)
    c = c_fourier(f, q, terms)
    bound = _error_constant(q) * q.pow(min(0.5 * f, n - f))
    return MeanAsymptotics(
        f_value=f,
        beta=drift.beta(n),
        c_value=c,
        estimate=f + c,
        error_bound=bound,
        terms_used=terms,
    )


def sigma_limit(beta, q) -> float:
    """Limiting variance along a constant-beta subsequence.

    Both halves of the finite variance split, extended to infinite range:
    sum_{i>=0} q^(-beta-i)/(1+q^(-beta-i))^2 + sum_{i>=0} q^(i+1-beta)/(1+q^(i+1-beta))^2.
    Terms are p(1-p) of logistic values; truncation below 1e-16 certifies 1e-14.
    """
    b = _beta_float(beta)
    q = as_qbase(q)
    alq = -q.log
    total = []
    i = 0
    while True:
        t1 = (b + i) * alq  # ln q^(-beta-i)
        t2 = -(i + 1 - b) * alq
        a = sigmoid(t1) * sigmoid(-t1)
        c = sigmoid(t2) * sigmoid(-t2)
        total.append(a + c)
        if i > 2 and max(a, c) < 1e-16:
            break
        i += 1
    return math.fsum(total)


def dnorm_alpha(beta) -> float:
    """Discrete-normal location parameter matching the constant-beta limit law."""
    b = _beta_float(beta)
    if b == 0.5:
        return 0.0
    if b < 0.5:
        return 0.5 + b
    return -0.5 + b


def floor_case(beta, q) -> int:
    """floor(c(beta, q) + beta), checked against its closed two-case form.

    The floor is 0 for beta < 1/2 and 1 otherwise. The numeric floor is taken
    with a 1e-9 snap (c + beta hits the integer 1 exactly at beta = 1/2);
    disagreement with the case table signals a numerics bug.
    """
    b = _beta_float(beta)
    expected = 0 if b < 0.5 else 1
    v = c_direct(b, q) + b
    computed = math.floor(v + 1e-9)
    if computed != expected:
        raise ConsistencyError(
            f"floor(c + beta) = {computed} at beta={b}, q={q}; case table says {expected}"
        )
    return computed


def limit_law(beta, q) -> LimitLaw:
    """Constant-beta limit law of the standardized KB sequence.

    Lattice probabilities (window |x| <= 50) follow the three-case form:
    beta < 1/2:  C q^((x-1)(x-2 beta)/2),  C = e_q(q) e_q(-q^beta) e_q(-q^(1-beta))
    beta > 1/2:  C q^(x(1+x-2 beta)/2)
    beta = 1/2:  e_q(q) e_q(-q^(1/2))^2 q^(x^2/2)
    These coincide with discrete normals at alpha = dnorm_alpha(beta).
    """
    b = _beta_float(beta)
    q = as_qbase(q)
    xs = np.arange(-LATTICE_HALF_WIDTH, LATTICE_HALF_WIDTH + 1)
    if b == 0.5:
        const = e_q(q.value, q) * e_q(-q.pow(0.5), q) ** 2
        expo = 0.5 * xs * xs
        delta = 1
    else:
        const = e_q(q.value, q) * e_q(-q.pow(b), q) * e_q(-q.pow(1.0 - b), q)
        if b < 0.5:
            expo = 0.5 * (xs - 1.0) * (xs - 2.0 * b)
            delta = 0
        else:
            expo = 0.5 * xs * (1.0 + xs - 2.0 * b)
            delta = 1
    probs = const * np.exp(expo * q.log)
    table = PMFTable(int(xs[0]), probs, min(math.fsum(probs.tolist()), 1.0))
    if floor_case(b, q) != delta:
        raise ConsistencyError(f"delta mismatch at beta={b}")
    return LimitLaw(
        beta=b,
        q=q,
        sigma=math.sqrt(sigma_limit(b, q)),
        delta=delta,
        c_value=c_direct(b, q),
        lattice_probs=table,
    )
