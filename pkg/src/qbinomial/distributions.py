"""Parameter records, pmf/moment evaluation, and exact sampling.

Covers the Kemp q-binomial law KB(n, theta, q), its Heine and discrete-normal
limit laws, and the classical binomial/Poisson reference laws. All pmf work
happens in log space with the q-power exponent carried through ScaledReal, so
the exponential parameter regimes theta ~ q**(-n) evaluate without overflow.

PMFTable is the common currency handed to the metrics engine: a finite lattice
window, its probabilities, and the mass the window captures.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .qcalc import (
    QBase,
    ScaledReal,
    as_qbase,
    log_qq_factorial,
    np_sigmoid,
    q_pochhammer_inf,
    sigmoid,
    softplus,
)

__all__ = [
    "Binomial",
    "DiscreteNormal",
    "Heine",
    "KempBinomial",
    "MomentPair",
    "PMFTable",
    "Poisson",
    "SupportError",
    "TableMassError",
    "binomial_table",
    "dnorm_pmf",
    "dnorm_table",
    "heine_mean",
    "heine_pmf",
    "heine_table",
    "kb_log_pmf",
    "kb_moments",
    "kb_pmf",
    "kb_sample",
    "kb_table",
    "poisson_table",
    "reference_pmf",
    "reflect",
    "sample_by_inversion",
]


class TableMassError(ValueError):
    """PMFTable leaks too much mass for the requested operation."""


class SupportError(ValueError):
    """Table support violates an operation's precondition."""


# ---------------------------------------------------------------------------
# parameter records


@dataclass(frozen=True)
class KempBinomial:
    """KB(n, theta, q): trial count n >= 0, shape theta >= 0, base q in (0,1).

    theta may be given as a plain float or a ScaledReal; it is stored scaled.
    theta = 0 is admitted as the point mass at 0.
    """

    n: int
    theta: ScaledReal
    q: QBase

    def __post_init__(self):
        q = as_qbase(self.q)
        object.__setattr__(self, "q", q)
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")
        th = self.theta
        if not isinstance(th, ScaledReal):
            th = ScaledReal.from_float(float(th), q)
        elif th.q.value != q.value:
            raise ValueError("theta carries a different q base")
        if th.sign < 0:
            raise ValueError("theta must be nonnegative")
        object.__setattr__(self, "theta", th)

    @property
    def log_theta(self) -> float:
        return self.theta.log_abs()


@dataclass(frozen=True)
class Heine:
    """Heine law H(theta) on {0, 1, ...}, the q-analogue of the Poisson law."""

    theta: float
    q: QBase

    def __post_init__(self):
        object.__setattr__(self, "q", as_qbase(self.q))
        if not self.theta >= 0.0:
            raise ValueError(f"theta must be nonnegative, got {self.theta!r}")


@dataclass(frozen=True)
class DiscreteNormal:
    """Discrete normal on Z: pmf proportional to q**(x*x/2 - x*alpha)."""

    alpha: float
    q: QBase

    def __post_init__(self):
        object.__setattr__(self, "q", as_qbase(self.q))
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha!r}")


@dataclass(frozen=True)
class Binomial:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 0 or not 0.0 <= self.p <= 1.0:
            raise ValueError(f"invalid binomial parameters ({self.n}, {self.p})")


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam!r}")


@dataclass(frozen=True)
class MomentPair:
    mean: float
    variance: float


# ---------------------------------------------------------------------------
# PMF tables


@dataclass(frozen=True, eq=False)
class PMFTable:
    """Probabilities on the lattice window offset, offset+1, ...

    captured_mass is the window's total probability; builders certify it
    against each law's tail bound so metrics can account for the leakage.
    """

    offset: int
    probs: np.ndarray
    captured_mass: float

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty 1-d array")
        if np.any(p < 0.0):
            raise ValueError("negative probability entry")
        if not 0.0 < self.captured_mass <= 1.0 + 1e-12:
            raise ValueError(f"captured_mass {self.captured_mass!r} outside (0, 1]")
        if abs(math.fsum(p.tolist()) - self.captured_mass) > 1e-9:
            raise ValueError("captured_mass inconsistent with table entries")

    def __len__(self) -> int:
        return self.probs.size

    @property
    def last(self) -> int:
        return self.offset + self.probs.size - 1

    def x_values(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.probs.size)

    def prob(self, x: int) -> float:
        i = x - self.offset
        if 0 <= i < self.probs.size:
            return float(self.probs[i])
        return 0.0

    def shifted(self, k: int) -> "PMFTable":
        """Table of X - k."""
        return PMFTable(self.offset - k, self.probs, self.captured_mass)

    def to_csv(self) -> str:
        lines = ["x,p"]
        for x, p in zip(self.x_values(), self.probs):
            lines.append(f"{x},{p:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "PMFTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        xs = [int(r["x"]) for r in rows]
        ps = [float(r["p"]) for r in rows]
        if xs != list(range(xs[0], xs[0] + len(xs))):
            raise ValueError("CSV lattice is not contiguous")
        return cls(xs[0], np.array(ps), min(math.fsum(ps), 1.0))

    def to_json(self) -> str:
        return json.dumps(
            {
                "offset": self.offset,
                "probs": self.probs.tolist(),
                "captured_mass": self.captured_mass,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PMFTable":
        d = json.loads(text)
        return cls(int(d["offset"]), np.array(d["probs"], dtype=float), float(d["captured_mass"]))


def _table_mass(probs: np.ndarray) -> float:
    return min(math.fsum(probs.tolist()), 1.0)


# ---------------------------------------------------------------------------
# Kemp q-binomial


def _kb_log_norm(d: KempBinomial) -> float:
    """ln prod_{i<n} (1 + theta q^i) via stable softplus terms."""
    lt, lq = d.log_theta, d.q.log
    return math.fsum(softplus(lt + i * lq) for i in range(d.n))


def kb_log_pmf(d: KempBinomial, x: int) -> float:
    """ln P(X = x); -inf outside the support {0, ..., n}."""
    if x < 0 or x > d.n:
        return -math.inf
    if d.theta.is_zero:
        return 0.0 if x == 0 else -math.inf
    q = d.q
    binom = (
        log_qq_factorial(d.n, q)
        - log_qq_factorial(x, q)
        - log_qq_factorial(d.n - x, q)
    )
    return binom + x * d.log_theta + 0.5 * x * (x - 1) * q.log - _kb_log_norm(d)


def kb_pmf(d: KempBinomial, x: int) -> float:
    """P(X = x) for X ~ KB(n, theta, q)."""
    return math.exp(kb_log_pmf(d, x)) if x >= 0 and x <= d.n else 0.0


def kb_table(d: KempBinomial) -> PMFTable:
    """Exact full-support table on {0, ..., n}."""
    n, q = d.n, d.q
    if d.theta.is_zero:
        probs = np.zeros(n + 1)
        probs[0] = 1.0
        return PMFTable(0, probs, 1.0)
    lqq = np.concatenate(
        ([0.0], np.cumsum(np.log1p(-np.exp(np.arange(1, n + 1) * q.log))))
    )
    x = np.arange(n + 1)
    logp = (
        lqq[n]
        - lqq[x]
        - lqq[n - x]
        + x * d.log_theta
        + 0.5 * x * (x - 1) * q.log
        - _kb_log_norm(d)
    )
    probs = np.exp(logp)
    return PMFTable(0, probs, _table_mass(probs))


def _kb_bernoulli_logits(d: KempBinomial) -> np.ndarray:
    """log-odds of the n independent Bernoulli components of the KB sum."""
    return d.log_theta + np.arange(d.n) * d.q.log


def kb_moments(d: KempBinomial) -> MomentPair:
    """Mean and variance of KB(n, theta, q).

    mean = sum_i theta q^i / (1 + theta q^i), variance replaces the
    denominator by its square; both are exact Bernoulli-sum identities.
    """
    if d.theta.is_zero or d.n == 0:
        return MomentPair(0.0, 0.0)
    lt, lq = d.log_theta, d.q.log
    ps = [sigmoid(lt + i * lq) for i in range(d.n)]
    mean = math.fsum(ps)
    var = math.fsum(p * (1.0 - p) for p in ps)
    return MomentPair(mean, var)


def kb_sample(d: KempBinomial, rng: np.random.Generator, size: int | None = None):
    """Draw from KB(n, theta, q) as a sum of n independent Bernoulli trials.

    Exact, O(n) per draw, deterministic for a seeded generator. Returns an
    int for size=None, otherwise an int64 array of that length.
    """
    if d.theta.is_zero or d.n == 0:
        return 0 if size is None else np.zeros(size, dtype=np.int64)
    probs = np_sigmoid(_kb_bernoulli_logits(d))
    if size is None:
        return int(np.count_nonzero(rng.random(d.n) < probs))
    out = np.empty(size, dtype=np.int64)
    step = max(1, (1 << 21) // max(d.n, 1))
    for start in range(0, size, step):
        k = min(step, size - start)
        out[start : start + k] = (rng.random((k, d.n)) < probs).sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# Heine


def _heine_log_eq_neg_theta(d: Heine) -> float:
    """ln e_q(-theta) = -ln (-theta; q)_inf."""
    return -math.log(q_pochhammer_inf(-d.theta, d.q))


def heine_pmf(d: Heine, x: int) -> float:
    """P(X = x) = q^{x(x-1)/2} theta^x / (q,q)_x * e_q(-theta); 0 for x < 0."""
    if x < 0:
        return 0.0
    if d.theta == 0.0:
        return 1.0 if x == 0 else 0.0
    logp = (
        0.5 * x * (x - 1) * d.q.log
        + x * math.log(d.theta)
        - log_qq_factorial(x, d.q)
        + _heine_log_eq_neg_theta(d)
    )
    return math.exp(logp)


def heine_mean(d: Heine) -> float:
    """Mean of H(theta): sum_{i>=0} theta q^i / (1 + theta q^i).

    For theta < 0.9 the alternating rearrangement
    sum_{l>=1} (-1)^(l-1) theta^l / (1 - q^l) converges geometrically and the
    first dropped term bounds the truncation; otherwise the series is summed
    directly until the geometric tail theta q^I / (1-q) drops below 1e-15.
    """
    theta, q = d.theta, d.q
    if theta == 0.0:
        return 0.0
    if theta < 0.9:
        terms = []
        power, l = theta, 1
        while True:
            t = power / -math.expm1(l * q.log)
            terms.append(t if l % 2 else -t)
            if t < 1e-15:
                break
            l += 1
            power *= theta
        return math.fsum(terms)
    lt, lq = math.log(theta), q.log
    count = math.ceil((math.log(1e-15) + math.log(1.0 - q.value) - lt) / lq) + 1
    chunks = []
    for start in range(0, count, 1 << 16):
        i = np.arange(start, min(start + (1 << 16), count))
        chunks.append(math.fsum(np_sigmoid(lt + i * lq).tolist()))
    return math.fsum(chunks)


def _heine_tail_bound(d: Heine, x: int, log_qq_inf: float) -> float:
    """Upper bound q^{x(x-1)/2} theta^x / (q;q)_inf on P(X = x)."""
    if d.theta == 0.0:
        return 0.0
    t = 0.5 * x * (x - 1) * d.q.log + x * math.log(d.theta) - log_qq_inf
    return math.exp(t) if t < 700 else math.inf


def heine_table(d: Heine, tol: float = 1e-12) -> PMFTable:
    """Finite window {0, ..., X} capturing mass >= 1 - tol.

    Stops once the pmf bound at x is below tol/1e3 and the term ratio
    theta q^x falls under 1/2, so the dropped tail is under tol.
    """
    if d.theta == 0.0:
        return PMFTable(0, np.array([1.0]), 1.0)
    q = d.q
    log_qq_inf = math.log(q_pochhammer_inf(q.value, q))
    log_const = _heine_log_eq_neg_theta(d)
    probs = []
    lqq = 0.0  # ln (q;q)_x, accumulated
    x = 0
    while True:
        logp = 0.5 * x * (x - 1) * q.log + x * math.log(d.theta) - lqq + log_const
        probs.append(math.exp(logp))
        ratio = d.theta * q.pow(x)
        if ratio < 0.5 and 2.0 * _heine_tail_bound(d, x + 1, log_qq_inf) < tol * 1e-3:
            break
        x += 1
        lqq += math.log1p(-q.pow(x))
    arr = np.array(probs)
    return PMFTable(0, arr, _table_mass(arr))


# ---------------------------------------------------------------------------
# discrete normal


def _dnorm_half_width(alpha: float, q: QBase, log_tail: float) -> int:
    """Smallest K with q^(K^2/2 - |alpha| K) below exp(log_tail)."""
    need = -log_tail / -q.log  # require K^2/2 - |alpha| K > need
    a = abs(alpha)
    return int(math.ceil(a + math.sqrt(a * a + 2.0 * need))) + 1


def _dnorm_log_norm(d: DiscreteNormal) -> float:
    """ln sum_k q^(k^2/2 - k alpha), k over a certified window."""
    K = _dnorm_half_width(d.alpha, d.q, math.log(1e-18))
    k = np.arange(-K, K + 1)
    ex = (0.5 * k * k - k * d.alpha) * d.q.log
    m = float(np.max(ex))
    return m + math.log(float(np.sum(np.exp(ex - m))))


def dnorm_pmf(d: DiscreteNormal, x: int) -> float:
    """P(X = x) on the integer lattice."""
    return math.exp((0.5 * x * x - x * d.alpha) * d.q.log - _dnorm_log_norm(d))


def dnorm_table(d: DiscreteNormal, tol: float = 1e-12) -> PMFTable:
    """Window centered near alpha capturing mass >= 1 - tol."""
    K = _dnorm_half_width(
        d.alpha, d.q, math.log(min(tol, 1e-12)) + math.log(1.0 - d.q.value) - math.log(4.0)
    )
    center = round(d.alpha)
    xs = np.arange(center - K, center + K + 1)
    logz = _dnorm_log_norm(d)
    probs = np.exp((0.5 * xs * xs - xs * d.alpha) * d.q.log - logz)
    return PMFTable(int(xs[0]), probs, _table_mass(probs))


# ---------------------------------------------------------------------------
# classical reference laws


def _binomial_log_pmf(n: int, p: float, x: int) -> float:
    if x < 0 or x > n:
        return -math.inf
    if p == 0.0:
        return 0.0 if x == 0 else -math.inf
    if p == 1.0:
        return 0.0 if x == n else -math.inf
    comb = math.lgamma(n + 1) - math.lgamma(x + 1) - math.lgamma(n - x + 1)
    return comb + x * math.log(p) + (n - x) * math.log1p(-p)


def _poisson_log_pmf(lam: float, x: int) -> float:
    if x < 0:
        return -math.inf
    if lam == 0.0:
        return 0.0 if x == 0 else -math.inf
    return -lam + x * math.log(lam) - math.lgamma(x + 1)


def reference_pmf(law, x: int) -> float:
    """pmf of a classical reference law (Binomial or Poisson), log-space."""
    if isinstance(law, Binomial):
        return math.exp(_binomial_log_pmf(law.n, law.p, x))
    if isinstance(law, Poisson):
        return math.exp(_poisson_log_pmf(law.lam, x))
    raise TypeError(f"not a reference law: {law!r}")


def binomial_table(law: Binomial) -> PMFTable:
    probs = np.array([reference_pmf(law, x) for x in range(law.n + 1)])
    return PMFTable(0, probs, _table_mass(probs))


def poisson_table(law: Poisson, tol: float = 1e-12) -> PMFTable:
    if law.lam == 0.0:
        return PMFTable(0, np.array([1.0]), 1.0)
    probs = []
    x = 0
    while True:
        probs.append(math.exp(_poisson_log_pmf(law.lam, x)))
        # beyond the mode the tail is dominated by a geometric series
        if x > law.lam and law.lam / (x + 1) < 0.5 and 2.0 * probs[-1] < tol * 1e-3:
            break
        x += 1
    arr = np.array(probs)
    return PMFTable(0, arr, _table_mass(arr))


# ---------------------------------------------------------------------------
# sampling and reflection


def sample_by_inversion(t: PMFTable, rng: np.random.Generator, size: int | None = None):
    """Invert the cumulative sums of a table; deterministic per seed.

    Requires captured_mass >= 1 - 1e-12 so the inversion error stays inside
    the table's own truncation budget.
    """
    if t.captured_mass < 1.0 - 1e-12:
        raise TableMassError(
            f"table captures only {t.captured_mass}; need >= 1 - 1e-12"
        )
    cdf = np.cumsum(t.probs)
    if size is None:
        i = int(np.searchsorted(cdf, rng.random(), side="right"))
        return t.offset + min(i, t.probs.size - 1)
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return t.offset + np.minimum(idx, t.probs.size - 1).astype(np.int64)


def reflect(t: PMFTable, n: int) -> PMFTable:
    """Table of Y = n - X; the support of t must lie within [0, n]."""
    if t.offset < 0 or t.last > n:
        raise SupportError(
            f"support [{t.offset}, {t.last}] not contained in [0, {n}]"
        )
    return PMFTable(n - t.last, t.probs[::-1].copy(), t.captured_mass)
