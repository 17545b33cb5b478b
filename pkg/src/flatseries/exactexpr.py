"""Exact algebra over the flat-germ derivative basis.

Every coefficient produced by the series construction is a finite linear
combination of monomials

    c * t**p * phi^(m1)(t) * phi^(m2)(t) * ...

with ``phi(t) = exp(-1/t**2)``, rational ``c`` and rational ``p``.  This set is
closed under addition, multiplication and d/dt, so the whole construction can
be carried out exactly.  Numeric evaluation goes through :class:`LogScaled`,
a sign plus natural-log magnitude, because the values involved range far
outside double precision.

The derivatives of ``phi`` are represented as ``phi^(k)(t) = R_k(1/t) phi(t)``
with integer polynomials ``R_k`` obeying ``R_{k+1}(s) = -s^2 R_k'(s) + 2 s^3 R_k(s)``.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

RationalLike = Union[int, Fraction, str, float]

# Relative size below which a signed sum is considered a numeric cancellation.
CANCEL_REL = 1e-15


def as_rational(x: RationalLike) -> Fraction:
    """Convert ints, Fractions, "p/q" strings and floats (exactly) to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Log-scaled numbers


@dataclass(frozen=True, slots=True)
class LogScaled:
    """Signed real stored as ``sign * exp(logmag)``.

    ``cancelled`` marks values that came out of a signed sum whose result was
    below ``CANCEL_REL`` relative to its largest term; such values are kept
    (or set to a flagged zero) rather than silently trusted.
    """

    sign: int
    logmag: float
    cancelled: bool = False

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.sign == 0:
            object.__setattr__(self, "logmag", -math.inf)
        elif math.isnan(self.logmag):
            raise ValueError("logmag is NaN")

    # constructors
    @classmethod
    def zero(cls, cancelled: bool = False) -> "LogScaled":
        return cls(0, -math.inf, cancelled)

    @classmethod
    def one(cls) -> "LogScaled":
        return cls(1, 0.0)

    @classmethod
    def from_float(cls, x: float) -> "LogScaled":
        if x == 0:
            return cls.zero()
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_rational(cls, q: RationalLike) -> "LogScaled":
        q = as_rational(q)
        if q == 0:
            return cls.zero()
        return cls(1 if q > 0 else -1, _log_abs_fraction(q))

    @classmethod
    def exp(cls, x: float) -> "LogScaled":
        """The positive number e**x."""
        return cls(1, float(x))

    # conversions
    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.logmag > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.logmag)

    def to_float(self) -> float:
        return float(self)

    def ln(self) -> float:
        """Natural log of a positive value."""
        if self.sign <= 0:
            raise ValueError("log of a non-positive value")
        return self.logmag

    def exp_of(self) -> "LogScaled":
        """e raised to this value."""
        x = float(self)
        if math.isinf(x):
            if x < 0:
                return LogScaled.zero()
            raise OverflowError("exp of a value beyond double range")
        return LogScaled(1, x, self.cancelled)

    # arithmetic
    def __neg__(self) -> "LogScaled":
        return LogScaled(-self.sign, self.logmag, self.cancelled)

    def __abs__(self) -> "LogScaled":
        return LogScaled(abs(self.sign), self.logmag, self.cancelled)

    def __mul__(self, other) -> "LogScaled":
        other = _coerce(other)
        flag = self.cancelled or other.cancelled
        if self.sign == 0 or other.sign == 0:
            return LogScaled.zero(flag)
        return LogScaled(self.sign * other.sign, self.logmag + other.logmag, flag)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogScaled":
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a LogScaled zero")
        return self * LogScaled(other.sign, -other.logmag, other.cancelled)

    def __rtruediv__(self, other) -> "LogScaled":
        return _coerce(other) / self

    def __pow__(self, p: float) -> "LogScaled":
        if self.sign < 0:
            raise ValueError("real power of a negative value")
        if self.sign == 0:
            if p > 0:
                return LogScaled.zero(self.cancelled)
            raise ZeroDivisionError("non-positive power of zero")
        return LogScaled(1, self.logmag * float(p), self.cancelled)

    def __add__(self, other) -> "LogScaled":
        return LogScaled.sum((self, _coerce(other)))

    __radd__ = __add__

    def __sub__(self, other) -> "LogScaled":
        return LogScaled.sum((self, -_coerce(other)))

    def __rsub__(self, other) -> "LogScaled":
        return LogScaled.sum((_coerce(other), -self))

    @staticmethod
    def sum(values: Iterable["LogScaled"]) -> "LogScaled":
        """Sign-aware log-sum-exp: positive and negative parts are summed separately."""
        pos, neg = [], []
        flag = False
        for v in values:
            flag = flag or v.cancelled
            if v.sign > 0:
                pos.append(v.logmag)
            elif v.sign < 0:
                neg.append(v.logmag)
        p, n = _lse(pos), _lse(neg)
        if p == -math.inf and n == -math.inf:
            return LogScaled.zero(flag)
        if n == -math.inf:
            return LogScaled(1, p, flag)
        if p == -math.inf:
            return LogScaled(-1, n, flag)
        big, small, sign = (p, n, 1) if p >= n else (n, p, -1)
        rest = -math.expm1(small - big)
        if rest < CANCEL_REL:
            if rest <= 0.0:
                return LogScaled.zero(True)
            return LogScaled(sign, big + math.log(rest), True)
        return LogScaled(sign, big + math.log(rest), flag)

    # ordering
    def _key(self):
        if self.sign > 0:
            return (1, self.logmag)
        if self.sign < 0:
            return (-1, -self.logmag)
        return (0, 0.0)

    def __lt__(self, other) -> bool:
        return self._key() < _coerce(other)._key()

    def __le__(self, other) -> bool:
        return self._key() <= _coerce(other)._key()

    def __gt__(self, other) -> bool:
        return self._key() > _coerce(other)._key()

    def __ge__(self, other) -> bool:
        return self._key() >= _coerce(other)._key()

    def is_close(self, other: "LogScaled", rel: float) -> bool:
        """Relative closeness of the represented values (not of the logs)."""
        other = _coerce(other)
        if self.sign != other.sign:
            return False
        if self.sign == 0:
            return True
        return abs(math.expm1(self.logmag - other.logmag)) <= rel


def _coerce(x) -> LogScaled:
    if isinstance(x, LogScaled):
        return x
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return LogScaled.from_rational(x)
    if isinstance(x, float):
        return LogScaled.from_float(x)
    raise TypeError(f"cannot combine LogScaled with {type(x).__name__}")


def _lse(xs: list[float]) -> float:
    if not xs:
        return -math.inf
    m = max(xs)
    if m == -math.inf:
        return m
    return m + math.log(math.fsum(math.exp(x - m) for x in xs))


def _log_abs_fraction(q: Fraction) -> float:
    # math.log accepts arbitrarily large ints.
    return math.log(abs(q.numerator)) - math.log(q.denominator)


# ---------------------------------------------------------------------------
# R_k polynomials


@dataclass(frozen=True)
class RPoly:
    """Integer polynomial in s = 1/t; ``coeffs[n]`` multiplies s**n."""

    coeffs: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    def derivative(self) -> "RPoly":
        if len(self.coeffs) <= 1:
            return RPoly((0,))
        return RPoly(tuple(n * c for n, c in enumerate(self.coeffs) if n > 0))

    def __call__(self, s: RationalLike) -> Fraction:
        """Exact value at rational s, by integer Horner on the numerator."""
        s = as_rational(s)
        a, b = s.numerator, s.denominator
        acc = 0
        bp = 1
        for c in reversed(self.coeffs):
            acc = acc * a + c * bp
            bp *= b
        # acc = sum c_n a^n b^(D-n); bp overshoots by one factor of b
        return Fraction(acc, bp // b)


@lru_cache(maxsize=None)
def phi_derivative_poly(k: int) -> RPoly:
    """R_k with phi^(k)(t) = R_k(1/t) exp(-1/t^2)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return RPoly((1,))
    prev = phi_derivative_poly(k - 1).coeffs
    out = [0] * (len(prev) + 3)
    for n, c in enumerate(prev):
        # -s^2 * (n c s^(n-1)) + 2 s^3 * c s^n
        out[n + 1] -= n * c
        out[n + 3] += 2 * c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return RPoly(tuple(out))


# ---------------------------------------------------------------------------
# PhiExpr


Key = tuple[Fraction, tuple[int, ...]]


@dataclass(frozen=True)
class PhiMonomial:
    coeff: Fraction
    tpow: Fraction
    phi_orders: tuple[int, ...]

    def key(self) -> Key:
        return (self.tpow, self.phi_orders)


_TERM_RE = re.compile(
    r"^\s*(-?\d+)(?:/(\d+))?\s+t\^\{(-?\d+)(?:/(\d+))?\}\s+phi\[([0-9,\s]*)\]\s*$"
)


class PhiExpr:
    """Canonical linear combination of ``t**p * prod phi^(m)`` monomials.

    Instances are treated as immutable; all operations return new objects.
    """

    __slots__ = ("_d", "_hash")

    def __init__(self, terms: Mapping[Key, Fraction] | None = None):
        d: dict[Key, Fraction] = {}
        if terms:
            for (p, orders), c in terms.items():
                if c:
                    d[(Fraction(p), tuple(sorted(orders)))] = Fraction(c)
        self._d = d
        self._hash = None

    @classmethod
    def _raw(cls, d: dict[Key, Fraction]) -> "PhiExpr":
        obj = cls.__new__(cls)
        obj._d = d
        obj._hash = None
        return obj

    # constructors
    @classmethod
    def zero(cls) -> "PhiExpr":
        return cls._raw({})

    @classmethod
    def const(cls, c: RationalLike) -> "PhiExpr":
        c = as_rational(c)
        return cls._raw({(Fraction(0), ()): c} if c else {})

    @classmethod
    def phi(cls, m: int = 0, coeff: RationalLike = 1) -> "PhiExpr":
        c = as_rational(coeff)
        return cls._raw({(Fraction(0), (m,)): c} if c else {})

    @classmethod
    def tpow(cls, p: RationalLike, coeff: RationalLike = 1) -> "PhiExpr":
        c = as_rational(coeff)
        return cls._raw({(as_rational(p), ()): c} if c else {})

    @classmethod
    def monomial(cls, coeff: RationalLike, tpow: RationalLike, orders: Iterable[int]) -> "PhiExpr":
        c = as_rational(coeff)
        return cls._raw({(as_rational(tpow), tuple(sorted(orders))): c} if c else {})

    # inspection
    @property
    def terms(self) -> tuple[PhiMonomial, ...]:
        return tuple(PhiMonomial(self._d[k], k[0], k[1]) for k in sorted(self._d))

    def items(self):
        return self._d.items()

    def is_zero(self) -> bool:
        return not self._d

    def __bool__(self) -> bool:
        return bool(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __eq__(self, other) -> bool:
        if isinstance(other, PhiExpr):
            return self._d == other._d
        if isinstance(other, (int, Fraction)):
            return self._d == PhiExpr.const(other)._d
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __repr__(self) -> str:
        if not self._d:
            return "PhiExpr(0)"
        return "PhiExpr(" + " + ".join(
            f"{format_rational(m.coeff)}*t^{format_rational(m.tpow)}*phi{list(m.phi_orders)}"
            for m in self.terms
        ) + ")"

    # ring operations
    def __add__(self, other) -> "PhiExpr":
        other = _as_expr(other)
        if not other._d:
            return self
        d = dict(self._d)
        for k, c in other._d.items():
            v = d.get(k, 0) + c
            if v:
                d[k] = v
            else:
                d.pop(k, None)
        return PhiExpr._raw(d)

    __radd__ = __add__

    def __neg__(self) -> "PhiExpr":
        return PhiExpr._raw({k: -c for k, c in self._d.items()})

    def __sub__(self, other) -> "PhiExpr":
        return self + (-_as_expr(other))

    def __rsub__(self, other) -> "PhiExpr":
        return _as_expr(other) - self

    def scale(self, c: RationalLike) -> "PhiExpr":
        c = as_rational(c)
        if not c:
            return PhiExpr.zero()
        return PhiExpr._raw({k: v * c for k, v in self._d.items()})

    def __mul__(self, other) -> "PhiExpr":
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = _as_expr(other)
        d: dict[Key, Fraction] = defaultdict(Fraction)
        for (p1, o1), c1 in self._d.items():
            for (p2, o2), c2 in other._d.items():
                d[(p1 + p2, _merge(o1, o2))] += c1 * c2
        return PhiExpr._raw({k: v for k, v in d.items() if v})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PhiExpr":
        if n < 0:
            raise ValueError("negative powers are not in the algebra")
        out = PhiExpr.const(1)
        for _ in range(n):
            out = out * self
        return out

    def ddt(self) -> "PhiExpr":
        """Exact t-derivative."""
        d: dict[Key, Fraction] = defaultdict(Fraction)
        for (p, orders), c in self._d.items():
            if p:
                d[(p - 1, orders)] += c * p
            prev = None
            for idx, m in enumerate(orders):
                if m == prev:
                    continue
                prev = m
                mult = orders.count(m)
                new = orders[:idx] + (m + 1,) + orders[idx + 1:]
                d[(p, tuple(sorted(new)))] += c * mult
        return PhiExpr._raw({k: v for k, v in d.items() if v})

    def ddt_n(self, n: int) -> "PhiExpr":
        e = self
        for _ in range(n):
            e = e.ddt()
        return e

    # misc
    def tpows(self) -> set[Fraction]:
        return {k[0] for k in self._d}

    def to_text(self) -> str:
        """One term per line: ``p/q t^{a/b} phi[m1,m2,...]``."""
        return "".join(
            f"{format_rational(m.coeff)} t^{{{format_rational(m.tpow)}}} "
            f"phi[{','.join(str(o) for o in m.phi_orders)}]\n"
            for m in self.terms
        )

    @classmethod
    def from_text(cls, text: str) -> "PhiExpr":
        d: dict[Key, Fraction] = defaultdict(Fraction)
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            mt = _TERM_RE.match(line)
            if not mt:
                raise ValueError(f"line {lineno}: cannot parse term {line!r}")
            c = Fraction(int(mt.group(1)), int(mt.group(2) or 1))
            p = Fraction(int(mt.group(3)), int(mt.group(4) or 1))
            body = mt.group(5).strip()
            orders = tuple(sorted(int(x) for x in body.split(","))) if body else ()
            d[(p, orders)] += c
        return cls._raw({k: v for k, v in d.items() if v})


def _merge(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def _as_expr(x) -> PhiExpr:
    if isinstance(x, PhiExpr):
        return x
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return PhiExpr.const(x)
    raise TypeError(f"cannot combine PhiExpr with {type(x).__name__}")


def expr_add(a: PhiExpr, b: PhiExpr) -> PhiExpr:
    return a + b


def expr_mul(a: PhiExpr, b: PhiExpr) -> PhiExpr:
    return a * b


def expr_ddt(e: PhiExpr) -> PhiExpr:
    return e.ddt()


# ---------------------------------------------------------------------------
# Evaluation


def _positive_t(t: RationalLike) -> Fraction:
    q = as_rational(t)
    if q <= 0:
        raise ValueError(f"t must be positive, got {t!r}")
    return q


def phi_poly_values(kmax: int, t: RationalLike) -> list[Fraction]:
    """Exact R_k(1/t) for k = 0..kmax."""
    s = 1 / _positive_t(t)
    return [phi_derivative_poly(k)(s) for k in range(kmax + 1)]


def eval_logscaled(e: PhiExpr, t: RationalLike) -> LogScaled:
    """Value of ``e`` at t > 0.

    Monomials sharing the same t-power and the same number of phi factors
    share the factor ``t**p * exp(-n/t**2)``, so their polynomial parts are
    summed exactly first; only the group totals meet floating point.
    """
    tq = _positive_t(t)
    if not e._d:
        return LogScaled.zero()
    s = 1 / tq
    s2 = s * s
    log_t = _log_abs_fraction(tq)
    rcache: dict[int, Fraction] = {}

    def r(m: int) -> Fraction:
        if m not in rcache:
            rcache[m] = phi_derivative_poly(m)(s)
        return rcache[m]

    groups: dict[tuple[Fraction, int], Fraction] = defaultdict(Fraction)
    for (p, orders), c in e._d.items():
        v = c
        for m in orders:
            v *= r(m)
        groups[(p, len(orders))] += v
    parts = []
    for (p, n), v in sorted(groups.items()):
        if not v:
            continue
        lm = _log_abs_fraction(v) + float(p) * log_t - float(n * s2)
        parts.append(LogScaled(1 if v > 0 else -1, lm))
    if not parts:
        # every group summed to an exact zero: a symbolic cancellation
        return LogScaled.zero()
    return LogScaled.sum(parts)


def eval_float(e: PhiExpr, t: RationalLike) -> float:
    return float(eval_logscaled(e, t))


# ---------------------------------------------------------------------------
# Iterated exponentials

_EXP_MAX = 709.0


@dataclass(frozen=True)
class Tower:
    """The number ``exp^level(top)``, i.e. ``level`` nested exponentials of ``top``.

    Canonical form keeps ``level`` as small as possible while ``top`` stays a
    finite double, so equal values built along different paths compare equal.
    """

    level: int
    top: float

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if not math.isfinite(self.top):
            raise ValueError("top must be finite")

    def canonical(self) -> "Tower":
        level, top = self.level, self.top
        while level > 0 and top <= _EXP_MAX:
            top = math.exp(top)
            level -= 1
        return Tower(level, top)

    def exp(self) -> "Tower":
        if self.level == 0 and self.top <= _EXP_MAX:
            return Tower(0, math.exp(self.top))
        return Tower(self.level + 1, self.top)

    def log(self) -> "Tower":
        if self.level > 0:
            return Tower(self.level - 1, self.top).canonical()
        if self.top <= 0:
            raise ValueError("log of a non-positive value")
        return Tower(0, math.log(self.top))

    def to_logscaled(self) -> LogScaled:
        c = self.canonical()
        if c.level == 0:
            return LogScaled.from_float(c.top)
        if c.level == 1:
            return LogScaled(1, c.top)
        raise OverflowError(f"exp^{c.level}({c.top}) is beyond log-scaled range")

    def compare(self, other: "Tower") -> int:
        """-1, 0 or 1 by value, found by taking logs of both sides in step."""
        a, b = self.canonical(), other.canonical()
        while True:
            if a.level == 0 and b.level == 0:
                return (a.top > b.top) - (a.top < b.top)
            if a.level == 0:
                if a.top <= 0:
                    return -1
                a, b = Tower(0, math.log(a.top)), Tower(b.level - 1, b.top)
            elif b.level == 0:
                if b.top <= 0:
                    return 1
                a, b = Tower(a.level - 1, a.top), Tower(0, math.log(b.top))
            else:
                a, b = Tower(a.level - 1, a.top), Tower(b.level - 1, b.top)

    def __lt__(self, other: "Tower") -> bool:
        return self.compare(other) < 0

    def __le__(self, other: "Tower") -> bool:
        return self.compare(other) <= 0

    def __gt__(self, other: "Tower") -> bool:
        return self.compare(other) > 0

    def __ge__(self, other: "Tower") -> bool:
        return self.compare(other) >= 0


def iterated_exp(n: int, x: float) -> Tower:
    """exp applied n times to x."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return Tower(n, float(x)).canonical()
