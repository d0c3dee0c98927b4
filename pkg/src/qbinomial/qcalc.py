"""Numerically robust q-calculus primitives.

q-Pochhammer symbols (finite and infinite), Gaussian binomial coefficients,
q-numbers and the two q-exponentials, plus a scaled number representation
(mantissa times an exact integer power of q) so that shape parameters like
theta = q**(-n - f(n)) stay representable far beyond binary64 range.

The base q always lies strictly inside (0, 1); the q -> 0 and q -> 1 regimes
are probed by evaluating at q = eps or q = 1 - eps, never at the endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "PoleError",
    "QBase",
    "ScaledReal",
    "E_q",
    "e_q",
    "log_qq_factorial",
    "q_binomial",
    "q_number",
    "q_pochhammer",
    "q_pochhammer_inf",
    "sigmoid",
    "softplus",
]

# Truncation policy for infinite products/series: stop once the current factor
# deviates from 1 by less than FACTOR_EPS; the geometric tail then bounds the
# relative error by FACTOR_EPS / (1 - q), i.e. below 1e-14 for q <= 0.999.
FACTOR_EPS = 1e-17

_CHUNK = 1 << 16


class PoleError(ValueError):
    """Argument of e_q sits within 1e-12 of a pole q**(-i)."""


@dataclass(frozen=True)
class QBase:
    """Base of the q-deformation, restricted to the open interval (0, 1)."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not math.isfinite(v) or not 0.0 < v < 1.0:
            raise ValueError(f"q must lie strictly inside (0, 1), got {self.value!r}")
        object.__setattr__(self, "value", v)

    @cached_property
    def log(self) -> float:
        """Natural log of q; always negative."""
        return math.log(self.value)

    def pow(self, x: float) -> float:
        """q**x for real x via exp(x log q); underflows gracefully to 0."""
        t = x * self.log
        if t < -745.0:
            return 0.0
        return math.exp(t)


def as_qbase(q) -> QBase:
    return q if isinstance(q, QBase) else QBase(float(q))


def sigmoid(t: float) -> float:
    """Logistic 1/(1 + exp(-t)), stable for any float t."""
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    z = math.exp(t)
    return z / (1.0 + z)


def softplus(t: float) -> float:
    """log(1 + exp(t)), stable for any float t."""
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


def np_sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    z = np.exp(t[~pos])
    out[~pos] = z / (1.0 + z)
    return out


@dataclass(frozen=True)
class ScaledReal:
    """sign * mantissa * q**exponent with mantissa normalized into [1, 1/q).

    The integer exponent absorbs the whole dynamic range, so products like
    theta * q**(-n) never overflow. Zero is canonically (sign=1, mantissa=0,
    exponent=0). Mixed-base arithmetic is rejected.
    """

    sign: int
    mantissa: float
    exponent: int
    q: QBase

    # -- construction ------------------------------------------------------

    @classmethod
    def _make(cls, sign: int, m: float, e: int, q: QBase) -> "ScaledReal":
        if m == 0.0:
            return cls(1, 0.0, 0, q)
        if not math.isfinite(m):
            raise ValueError(f"non-finite mantissa {m!r}")
        if m < 0.0:
            sign, m = -sign, -m
        qv, lq = q.value, q.log
        inv = 1.0 / qv
        if not 1.0 <= m < inv:
            shift = math.ceil(math.log(m) / lq)  # bring m*q**-shift into [1, 1/q)
            if shift:
                if abs(shift * lq) < 600.0:
                    m *= qv**-shift
                else:
                    # two in-range pow steps; exp(log m - shift*lq) would cost ~1e-13
                    half = shift // 2
                    m = (m * qv**-half) * qv ** -(shift - half)
                e += shift
        while m >= inv:
            m *= qv
            e -= 1
        while m < 1.0:
            m *= inv
            e += 1
        return cls(sign, m, e, q)

    @classmethod
    def from_float(cls, x: float, q) -> "ScaledReal":
        q = as_qbase(q)
        if x == 0.0:
            return cls(1, 0.0, 0, q)
        return cls._make(1, float(x), 0, q)

    @classmethod
    def from_q_power(cls, p: float, q) -> "ScaledReal":
        """The value q**p for real p, exactly scaled (exponent = ceil(p))."""
        q = as_qbase(q)
        e = math.ceil(p)
        return cls._make(1, q.pow(p - e), e, q)

    @classmethod
    def from_log(cls, sign: int, log_value: float, q) -> "ScaledReal":
        """sign * exp(log_value), renormalized; log_value = -inf gives zero."""
        q = as_qbase(q)
        if log_value == -math.inf:
            return cls(1, 0.0, 0, q)
        e = math.ceil(log_value / q.log)
        return cls._make(sign, math.exp(log_value - e * q.log), e, q)

    @classmethod
    def zero(cls, q) -> "ScaledReal":
        return cls(1, 0.0, 0, as_qbase(q))

    @classmethod
    def one(cls, q) -> "ScaledReal":
        return cls(1, 1.0, 0, as_qbase(q))

    # -- queries -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def log_abs(self) -> float:
        """ln |value|; -inf for zero."""
        if self.is_zero:
            return -math.inf
        return math.log(self.mantissa) + self.exponent * self.q.log

    def to_float(self) -> float:
        """Nearest binary64 value; +-inf on overflow, 0 on underflow."""
        if self.is_zero:
            return 0.0
        t = self.log_abs()
        if t > 709.0:
            return math.inf if self.sign > 0 else -math.inf
        if t < -745.0:
            return 0.0
        return self.sign * self.mantissa * self.q.value ** self.exponent

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "ScaledReal":
        if isinstance(other, ScaledReal):
            if other.q.value != self.q.value:
                raise ValueError("mixed q bases in ScaledReal arithmetic")
            return other
        return ScaledReal.from_float(float(other), self.q)

    def q_shift(self, k: int) -> "ScaledReal":
        """Multiply by q**k exactly (integer k)."""
        if self.is_zero:
            return self
        return ScaledReal(self.sign, self.mantissa, self.exponent + k, self.q)

    def __neg__(self) -> "ScaledReal":
        if self.is_zero:
            return self
        return ScaledReal(-self.sign, self.mantissa, self.exponent, self.q)

    def __mul__(self, other) -> "ScaledReal":
        other = self._coerce(other)
        if self.is_zero or other.is_zero:
            return ScaledReal.zero(self.q)
        return self._make(
            self.sign * other.sign,
            self.mantissa * other.mantissa,
            self.exponent + other.exponent,
            self.q,
        )

    __rmul__ = __mul__

    def __add__(self, other) -> "ScaledReal":
        other = self._coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        e0 = min(self.exponent, other.exponent)
        qv = self.q.value
        va = self.sign * self.mantissa * qv ** (self.exponent - e0)
        vb = other.sign * other.mantissa * qv ** (other.exponent - e0)
        return self._make(1, va + vb, e0, self.q)

    __radd__ = __add__

    def __sub__(self, other) -> "ScaledReal":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "ScaledReal":
        return self._coerce(other) + (-self)

    def reciprocal(self) -> "ScaledReal":
        if self.is_zero:
            raise ZeroDivisionError("division by ScaledReal zero")
        return self._make(self.sign, 1.0 / self.mantissa, -self.exponent, self.q)

    def __truediv__(self, other) -> "ScaledReal":
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other) -> "ScaledReal":
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int) -> "ScaledReal":
        if not isinstance(k, int):
            raise TypeError("ScaledReal exponent must be an integer")
        if self.is_zero:
            if k == 0:
                return ScaledReal.one(self.q)
            if k < 0:
                raise ZeroDivisionError("zero to a negative power")
            return self
        sign = 1 if (self.sign > 0 or k % 2 == 0) else -1
        return ScaledReal.from_log(sign, k * self.log_abs(), self.q)


def _as_scaled(z, q: QBase) -> ScaledReal:
    if isinstance(z, ScaledReal):
        if z.q.value != q.value:
            raise ValueError("ScaledReal argument carries a different q base")
        return z
    return ScaledReal.from_float(float(z), q)


def q_pochhammer(z, q, n: int) -> ScaledReal:
    """Finite q-shifted factorial (z; q)_n = prod_{i=0}^{n-1} (1 - z q^i).

    z may be a float or a ScaledReal; the result is scaled so the huge
    dynamic range of e.g. (-theta*q**-n; q)_n stays representable.
    """
    q = as_qbase(q)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    zs = _as_scaled(z, q)
    one = ScaledReal.one(q)
    acc = one
    for i in range(n):
        acc = acc * (one - zs.q_shift(i))
        if acc.is_zero:
            break
    return acc


def _log_pochhammer_inf(z: float, q: QBase, guard: float | None = None):
    """(sign, log|value|) of (z; q)_inf; sign 0.0 for an exact zero factor.

    Truncates after the factor index I with |z| q^I < FACTOR_EPS; the dropped
    tail changes the log by at most FACTOR_EPS / (1 - q).
    """
    az = abs(z)
    if az == 0.0 or az < FACTOR_EPS:
        return 1.0, 0.0
    lq = q.log
    count = max(1, math.ceil((math.log(FACTOR_EPS) - math.log(az)) / lq) + 1)
    sign = 1.0
    total = 0.0
    for start in range(0, count, _CHUNK):
        i = np.arange(start, min(start + _CHUNK, count))
        u = z * np.exp(i * lq)  # z q^i
        factors = 1.0 - u
        if guard is not None and np.any(np.abs(factors) < guard):
            raise PoleError(f"argument z={z!r} within {guard} of a pole q**-i")
        if np.any(factors == 0.0):
            return 0.0, -math.inf
        neg = factors < 0.0
        if np.any(neg):
            if np.count_nonzero(neg) % 2:
                sign = -sign
            total += float(np.sum(np.log(np.abs(factors[neg]))))
            small = ~neg
        else:
            small = np.ones_like(neg)
        total += float(np.sum(np.log1p(-u[small])))
    return sign, total


def q_pochhammer_inf(z: float, q) -> float:
    """Infinite product (z; q)_inf to relative accuracy ~1e-14.

    Factors are dropped once |z| q^i < 1e-17, which a geometric tail bound
    converts into a relative error below 1e-17/(1-q).
    """
    q = as_qbase(q)
    sign, total = _log_pochhammer_inf(float(z), q)
    if sign == 0.0:
        return 0.0
    return sign * math.exp(total)


def e_q(z: float, q) -> float:
    """Small q-exponential e_q(z) = 1 / (z; q)_inf.

    Raises PoleError when some factor |1 - z q^i| falls below 1e-12, i.e.
    when z approaches a pole q**(-i).
    """
    q = as_qbase(q)
    sign, total = _log_pochhammer_inf(float(z), q, guard=1e-12)
    return sign * math.exp(-total)


def E_q(z: float, q) -> float:
    """Large q-exponential E_q(z) = (-z; q)_inf; satisfies e_q(z)E_q(-z) = 1."""
    return q_pochhammer_inf(-float(z), q)


def log_qq_factorial(n: int, q) -> float:
    """ln (q; q)_n = sum_{i=1}^{n} ln(1 - q^i)."""
    q = as_qbase(q)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n == 0:
        return 0.0
    i = np.arange(1, n + 1)
    return float(np.sum(np.log1p(-np.exp(i * q.log))))


def q_binomial(n: int, k: int, q) -> float:
    """Gaussian binomial coefficient (q,q)_n / ((q,q)_k (q,q)_{n-k}).

    Returns 0 outside 0 <= k <= n. Evaluated in log space.
    """
    q = as_qbase(q)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if k < 0 or k > n:
        return 0.0
    return math.exp(
        log_qq_factorial(n, q) - log_qq_factorial(k, q) - log_qq_factorial(n - k, q)
    )


def q_number(x: float, q) -> float:
    """The q-number [x]_q = (1 - q^x) / (1 - q); tends to x as q -> 1."""
    q = as_qbase(q)
    return -math.expm1(x * q.log) / (1.0 - q.value)
