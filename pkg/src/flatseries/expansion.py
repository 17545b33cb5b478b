"""Exact power-series construction for perturbed backward heat equations.

We look for u_s(x, t) = sum_{i,j} V^{i,j}(t) x^i s^j solving

    (d/dt + d^2/dx^2) u = s t^th0 Q(t^th1 u, t^th2 u', t^th3 u'')

with Q analytic, Q(0) = 0 and grad Q(0) = 0.  Matching the coefficient of
x^i s^j gives

    d/dt V^{i,j} + (i+1)(i+2) V^{i+2,j}
        = sum_{a,b,c} q_abc t^(th0 + a th1 + b th2 + c th3) [u^a u'^b u''^c]_{x^i s^(j-1)}

whose right side only involves rows j' < j, so the table is filled row by row
with exact PhiExpr entries.  The base row is V^{2i,0} = (-1)^i phi^(i)/(2i)!,
and V^{0,j} = V^{1,j} = 0 for j >= 1.

Two independent routes are kept on purpose: the builder sums the slot
products by a memoized recursion, while the residual check recomputes the
composition with truncated bivariate series arithmetic.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import combinat
from .exactexpr import LogScaled, PhiExpr, RationalLike, as_rational, eval_logscaled, format_rational
from .tikhonov import phi_bound_check, phi_eval

Triple = tuple[int, int, int]


# ---------------------------------------------------------------------------
# Inputs


@dataclass(frozen=True)
class QTaylor:
    """Taylor coefficients q_abc of Q(u, u', u'') at the origin."""

    coeffs: dict
    D: int

    def __post_init__(self):
        clean = {}
        for key, val in dict(self.coeffs).items():
            key = tuple(int(k) for k in key)
            if len(key) != 3 or min(key) < 0:
                raise ValueError(f"bad index triple {key}")
            q = as_rational(val)
            if q == 0:
                continue
            if sum(key) <= 1:
                raise ValueError(
                    f"Q must vanish to second order at the origin; got coefficient {q} at {key}"
                )
            if sum(key) > self.D:
                raise ValueError(f"triple {key} exceeds the degree cutoff {self.D}")
            clean[key] = q
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def quadratic(cls, coeff: RationalLike = 1) -> "QTaylor":
        """Q = coeff * u^2."""
        return cls({(2, 0, 0): coeff}, 2)

    @classmethod
    def zero(cls) -> "QTaylor":
        return cls({}, 2)

    def items(self):
        return sorted(self.coeffs.items())

    def scaled(self, lam: RationalLike) -> "QTaylor":
        lam = as_rational(lam)
        return QTaylor({k: v * lam for k, v in self.coeffs.items()}, self.D)

    def merged(self, other: "QTaylor") -> "QTaylor":
        d = defaultdict(Fraction, self.coeffs)
        for k, v in other.coeffs.items():
            d[k] += v
        return QTaylor(dict(d), max(self.D, other.D))

    def is_pure_quadratic(self) -> bool:
        return set(self.coeffs) <= {(2, 0, 0)}

    def to_text(self) -> str:
        return "".join(f"{a} {b} {c} {format_rational(q)}\n" for (a, b, c), q in self.items())

    @classmethod
    def from_text(cls, text: str, D: int | None = None) -> "QTaylor":
        coeffs: dict[Triple, Fraction] = defaultdict(Fraction)
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 'i0 i1 i2 p/q', got {line!r}")
            try:
                key = (int(parts[0]), int(parts[1]), int(parts[2]))
                coeffs[key] += Fraction(parts[3])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        deg = max((sum(k) for k in coeffs), default=2)
        return cls(dict(coeffs), max(deg, D or 0))

    @classmethod
    def from_file(cls, path: str | Path, D: int | None = None) -> "QTaylor":
        return cls.from_text(Path(path).read_text(), D)


@dataclass(frozen=True)
class ExponentProfile:
    th0: Fraction = Fraction(0)
    th1: Fraction = Fraction(0)
    th2: Fraction = Fraction(0)
    th3: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("th0", "th1", "th2", "th3"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))

    @classmethod
    def parse(cls, text: str) -> "ExponentProfile":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 4:
            raise ValueError("exponent profile needs four comma-separated rationals")
        return cls(*(Fraction(p) for p in parts))

    def tpow(self, key: Triple) -> Fraction:
        a, b, c = key
        return self.th0 + a * self.th1 + b * self.th2 + c * self.th3

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.th0, self.th1, self.th2, self.th3)


# ---------------------------------------------------------------------------
# The table


def base_entry(i: int) -> PhiExpr:
    """V^{i,0}: (-1)^(i/2) phi^(i/2) / i! for even i, zero for odd i."""
    if i % 2:
        return PhiExpr.zero()
    h = i // 2
    return PhiExpr.phi(h, Fraction((-1) ** h, math.factorial(i)))


@dataclass
class CoeffTable:
    I: int
    J: int
    V: dict
    Q: QTaylor
    theta: ExponentProfile
    sigma: int = -1
    dependencies: dict = field(default_factory=dict, repr=False)

    def get(self, i: int, j: int) -> PhiExpr:
        return self.V.get((i, j), PhiExpr.zero()) if i >= 0 and j >= 0 else PhiExpr.zero()

    def entries(self) -> Iterable[tuple[tuple[int, int], PhiExpr]]:
        return sorted(self.V.items())

    def to_text(self) -> str:
        """PhiExpr text form per entry, under an ``[i,j]`` header line."""
        out = []
        for (i, j), e in self.entries():
            out.append(f"[{i},{j}]\n{e.to_text()}")
        return "".join(out)

    def tpows(self) -> set[Fraction]:
        s: set[Fraction] = set()
        for _, e in self.entries():
            s |= e.tpows()
        return s


class _SlotSums:
    """Memoized sums over ordered slot assignments.

    F(a, b, c, i, j) sums, over all ways of giving the a u-slots, b u'-slots
    and c u''-slots x-indices summing to i and s-indices summing to j, the
    product of the slot factors V^{i,j}, (i+1) V^{i+1,j}, (i+1)(i+2) V^{i+2,j}.
    """

    def __init__(self, table: dict, record: set | None = None):
        self.table = table
        self.memo: dict = {}
        self.record = record

    def factor(self, kind: int, i: int, j: int) -> PhiExpr:
        idx = i + kind
        if self.record is not None:
            self.record.add((idx, j))
        e = self.table.get((idx, j))
        if e is None or e.is_zero():
            return PhiExpr.zero()
        if kind == 0:
            return e
        if kind == 1:
            return e.scale(i + 1)
        return e.scale((i + 1) * (i + 2))

    def __call__(self, a: int, b: int, c: int, i: int, j: int) -> PhiExpr:
        key = (a, b, c, i, j)
        if key in self.memo:
            if self.record is not None:
                self._touch(a, b, c, i, j)
            return self.memo[key]
        if a == b == c == 0:
            val = PhiExpr.const(1) if i == 0 and j == 0 else PhiExpr.zero()
        else:
            kind, rest = (0, (a - 1, b, c)) if a else ((1, (a, b - 1, c)) if b else (2, (a, b, c - 1)))
            val = PhiExpr.zero()
            for i1 in range(i + 1):
                for j1 in range(j + 1):
                    f = self.factor(kind, i1, j1)
                    if f.is_zero():
                        continue
                    tail = self(*rest, i - i1, j - j1)
                    if not tail.is_zero():
                        val = val + f * tail
        self.memo[key] = val
        return val

    def _touch(self, a, b, c, i, j):
        # replay table reads for a cached value so dependency records stay complete
        if a == b == c == 0:
            return
        kind, rest = (0, (a - 1, b, c)) if a else ((1, (a, b - 1, c)) if b else (2, (a, b, c - 1)))
        for i1 in range(i + 1):
            for j1 in range(j + 1):
                self.record.add((i1 + kind, j1))


def build_coeff_table(Q: QTaylor, theta: ExponentProfile, I: int, J: int,
                      record_dependencies: bool = False) -> CoeffTable:
    """Fill V^{i,j} for 0 <= i <= I, 0 <= j <= J by the coefficient recurrence."""
    if I < 0 or J < 0:
        raise ValueError("I and J must be nonnegative")
    V: dict = {}
    for i in range(I + 1):
        V[(i, 0)] = base_entry(i)
    deps: dict = {}
    record: set | None = set() if record_dependencies else None
    slots = _SlotSums(V, record)
    terms = [(key, q, theta.tpow(key)) for key, q in Q.items()]
    for j in range(1, J + 1):
        V[(0, j)] = PhiExpr.zero()
        if I >= 1:
            V[(1, j)] = PhiExpr.zero()
        for i in range(0, I - 1):
            if record is not None:
                record.clear()
                record.add((i, j))  # d/dt V^{i,j}
            rhs = PhiExpr.zero()
            for (a, b, c), q, p in terms:
                prod = slots(a, b, c, i, j - 1)
                if not prod.is_zero():
                    rhs = rhs + (prod * PhiExpr.tpow(p)).scale(q)
            V[(i + 2, j)] = (rhs - V[(i, j)].ddt()).scale(Fraction(1, (i + 1) * (i + 2)))
            if record is not None:
                deps[(i + 2, j)] = frozenset(k for k in record if k in V)
    return CoeffTable(I, J, V, Q, theta, -1, deps)


def build_quadratic_table(I: int, J: int) -> CoeffTable:
    """Q = u^2, theta = 0, via the unrolled closed form

    V^{i,j} = sum_s (i-2-2s)!/i! (-d/dt)^s sum_{i1+i2=i-2-2s, j1+j2=j-1} V^{i1,j1} V^{i2,j2}.
    """
    V: dict = {(i, 0): base_entry(i) for i in range(I + 1)}
    for j in range(1, J + 1):
        # products of rows below j at every x-order, computed once per row
        prods = {}
        for n in range(I - 1):
            acc = PhiExpr.zero()
            for i1 in range(n + 1):
                for j1 in range(j):
                    a, b = V[(i1, j1)], V[(n - i1, j - 1 - j1)]
                    if not a.is_zero() and not b.is_zero():
                        acc = acc + a * b
            prods[n] = acc
        for i in range(I + 1):
            if i < 2:
                V[(i, j)] = PhiExpr.zero()
                continue
            acc = PhiExpr.zero()
            for s in range(i // 2):
                n = i - 2 - 2 * s
                term = prods[n].ddt_n(s).scale(Fraction((-1) ** s * math.factorial(n), math.factorial(i)))
                acc = acc + term
            V[(i, j)] = acc
    return CoeffTable(I, J, V, QTaylor.quadratic(), ExponentProfile(), -1)


# ---------------------------------------------------------------------------
# Truncated bivariate series (second route)

Series = dict  # (i, j) -> PhiExpr


def _series_mul(A: Series, B: Series, imax: int, jmax: int) -> Series:
    out: Series = {}
    for (i1, j1), a in A.items():
        for (i2, j2), b in B.items():
            i, j = i1 + i2, j1 + j2
            if i > imax or j > jmax:
                continue
            p = a * b
            out[(i, j)] = out[(i, j)] + p if (i, j) in out else p
    return {k: v for k, v in out.items() if not v.is_zero()}


def _series_pow(A: Series, n: int, imax: int, jmax: int) -> Series:
    out: Series = {(0, 0): PhiExpr.const(1)}
    for _ in range(n):
        out = _series_mul(out, A, imax, jmax)
    return out


def _derivative_series(tab: CoeffTable, order: int) -> Series:
    out: Series = {}
    for (i, j), e in tab.V.items():
        if i < order or e.is_zero():
            continue
        mult = math.prod(range(i - order + 1, i + 1))
        out[(i - order, j)] = e.scale(mult)
    return out


def composed_rhs(tab: CoeffTable, imax: int | None = None, jmax: int | None = None) -> Series:
    """Coefficients of s t^th0 Q(...) applied to the truncated table, by series arithmetic."""
    imax = tab.I if imax is None else imax
    jmax = tab.J if jmax is None else jmax
    U = [_derivative_series(tab, k) for k in range(3)]
    cache: dict = {}

    def power(kind: int, n: int) -> Series:
        if (kind, n) not in cache:
            cache[(kind, n)] = _series_pow(U[kind], n, imax, jmax - 1)
        return cache[(kind, n)]

    out: Series = {}
    for (a, b, c), q in tab.Q.items():
        prod = _series_mul(_series_mul(power(0, a), power(1, b), imax, jmax - 1), power(2, c), imax, jmax - 1)
        tp = PhiExpr.tpow(tab.theta.tpow((a, b, c)), q)
        for (i, j), e in prod.items():
            key = (i, j + 1)
            term = e * tp
            out[key] = out[key] + term if key in out else term
    return {k: v for k, v in out.items() if not v.is_zero()}


def pde_lhs(tab: CoeffTable) -> Series:
    """Coefficients of (d/dt + d^2/dx^2) u for the truncated table."""
    out: Series = {}
    for i in range(tab.I + 1):
        for j in range(tab.J + 1):
            e = tab.get(i, j).ddt() + tab.get(i + 2, j).scale((i + 1) * (i + 2))
            if not e.is_zero():
                out[(i, j)] = e
    return out


def pde_residual_exact(tab: CoeffTable) -> dict:
    """Nonzero coefficients of LHS - RHS for i <= I, j <= J."""
    lhs = pde_lhs(tab)
    rhs = composed_rhs(tab)
    out = {}
    for key in sorted(set(lhs) | set(rhs)):
        i, j = key
        if i > tab.I or j > tab.J:
            continue
        r = lhs.get(key, PhiExpr.zero()) - rhs.get(key, PhiExpr.zero())
        if not r.is_zero():
            out[key] = r
    return out


def residual_contract_ok(tab: CoeffTable, residuals: dict | None = None) -> bool:
    residuals = pde_residual_exact(tab) if residuals is None else residuals
    return all(i > tab.I - 2 for (i, _j) in residuals)


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True)
class EvalDomain:
    c: float
    t_max: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("domain constant must be positive")

    def contains(self, x: float, t: float) -> bool:
        return 0 < t <= self.t_max and x * x <= self.c / t


def _weighted_sum(tab: CoeffTable, x: Fraction, s: Fraction, imax: int, jmax: int,
                  deriv: int = 0, dt: bool = False) -> PhiExpr:
    acc: dict = defaultdict(Fraction)
    for (i, j), e in tab.V.items():
        if i > imax or j > jmax or i < deriv or e.is_zero():
            continue
        w = Fraction(math.prod(range(i - deriv + 1, i + 1))) * x ** (i - deriv) * s**j
        if not w:
            continue
        ee = e.ddt() if dt else e
        for k, c in ee.items():
            acc[k] += c * w
    return PhiExpr({k: v for k, v in acc.items() if v})


def eval_us_checked(tab: CoeffTable, x: RationalLike, t: RationalLike, s: RationalLike,
                    domain: EvalDomain | None = None, imax: int | None = None,
                    jmax: int | None = None) -> tuple[LogScaled, bool]:
    """Truncated sum and whether (x, t) lies in the certified domain."""
    tq = as_rational(t)
    if tq <= 0:
        return LogScaled.zero(), True
    imax = tab.I if imax is None else imax
    jmax = tab.J if jmax is None else jmax
    e = _weighted_sum(tab, as_rational(x), as_rational(s), imax, jmax)
    certified = domain is not None and domain.contains(float(x), float(tq))
    return eval_logscaled(e, tq), certified


def eval_us(tab: CoeffTable, x: RationalLike, t: RationalLike, s: RationalLike,
            domain: EvalDomain | None = None) -> LogScaled:
    return eval_us_checked(tab, x, t, s, domain)[0]


@dataclass(frozen=True)
class NumericResidual:
    fd: float
    reference: float
    certified: bool
    step_warning: bool


def _q_value(tab: CoeffTable, t: float, u: float, ux: float, uxx: float) -> float:
    total = 0.0
    for (a, b, c), q in tab.Q.items():
        total += float(q) * t ** float(tab.theta.tpow((a, b, c))) * u**a * ux**b * uxx**c
    return total


def pde_residual_numeric(tab: CoeffTable, x: float, t: float, s: float, h: float = 1e-4,
                         domain: EvalDomain | None = None) -> NumericResidual:
    """Centered finite-difference residual and its exact-derivative reference.

    ``fd`` applies second-order central differences to the evaluated series;
    ``reference`` uses exact derivatives of the truncated series, so it is
    the true residual of the truncation (the boundary terms plus the orders
    of Q beyond the table).  They differ by O(h^2).
    """
    xq, tq, sq = as_rational(x), as_rational(t), as_rational(s)

    def u(dx: float, dt: float) -> float:
        return float(eval_us(tab, xq + as_rational(dx), tq + as_rational(dt), sq))

    u0 = u(0, 0)
    u_t = (u(0, h) - u(0, -h)) / (2 * h)
    u_x = (u(h, 0) - u(-h, 0)) / (2 * h)
    u_xx = (u(h, 0) - 2 * u0 + u(-h, 0)) / (h * h)
    tf = float(tq)
    fd = u_t + u_xx - float(sq) * _q_value(tab, tf, u0, u_x, u_xx)

    def ex(deriv: int = 0, dt: bool = False) -> float:
        return float(eval_logscaled(_weighted_sum(tab, xq, sq, tab.I, tab.J, deriv, dt), tq))

    ref = ex(dt=True) + ex(2) - float(sq) * _q_value(tab, tf, ex(0), ex(1), ex(2))
    certified = domain is not None and domain.contains(float(x), tf)
    return NumericResidual(fd, ref, certified, h < 1e-6)


# ---------------------------------------------------------------------------
# Structure checks


@dataclass(frozen=True)
class VanishingResult:
    passed: bool
    failures: tuple


def vanishing_structure_check(tab: CoeffTable, quadratic: bool | None = None) -> VanishingResult:
    """Exact zero checks: odd rows and i < 2j for Q = u^2, imposed rows for any Q."""
    quadratic = tab.Q.is_pure_quadratic() if quadratic is None else quadratic
    bad = []
    for (i, j), e in tab.entries():
        if e.is_zero():
            continue
        if j >= 1 and i in (0, 1):
            bad.append((i, j, "imposed"))
        if quadratic and i % 2 == 1:
            bad.append((i, j, "odd"))
        if quadratic and i < 2 * j:
            bad.append((i, j, "i<2j"))
        if j == 0 and e != base_entry(i):
            bad.append((i, j, "base"))
    return VanishingResult(not bad, tuple(bad))


def triangular_order_ok(tab: CoeffTable) -> bool:
    """Every recorded read precedes its entry in (j, i) order."""
    if not tab.dependencies:
        raise ValueError("table was built without dependency recording")
    for (i, j), deps in tab.dependencies.items():
        for (i2, j2) in deps:
            if not (j2 < j or (j2 == j and i2 < i)):
                return False
    return True


# ---------------------------------------------------------------------------
# Majorant certificates


@dataclass
class BoundCertificate:
    i: int
    j: int
    m: int
    convention: str
    t_grid: tuple
    lhs: tuple
    rhs: tuple
    passed: bool

    @property
    def max_ratio(self) -> float:
        ratios = [l / r if r > 0 else (0.0 if l == 0 else math.inf) for l, r in zip(self.lhs, self.rhs)]
        return max(ratios, default=0.0)


QUAD_LIMIT = 10
J_LIMIT = 3


def _abs_log(v: LogScaled) -> float:
    return v.logmag


def quadratic_w(tab: CoeffTable, i: int, j: int, m: int, t: Fraction) -> float:
    """W^{2i,j}_m = (2i)!/(2i+2m)! |d^m V^{2i,j}(t)|."""
    v = eval_logscaled(tab.get(2 * i, j).ddt_n(m), t)
    if v.sign == 0:
        return 0.0
    return math.exp(v.logmag + math.lgamma(2 * i + 1) - math.lgamma(2 * i + 2 * m + 1))


def quadratic_majorant(i: int, j: int, m: int, t: Fraction) -> float:
    """Cat(j) sum over (i_k, m_k), k = 0..j, with sum(i_k + m_k) = i + m - j of prod W^{2i_k,0}_{m_k}.

    W^{2a,0}_b = |phi^(a+b)| / (2a+2b)!, and the composition sum is enumerated explicitly.
    """
    n = i + m - j
    if n < 0:
        return 0.0
    logw = {}
    for a in range(n + 1):
        v = phi_eval(a, t)
        logw[a] = v.logmag - math.lgamma(2 * a + 1)
    total = 0.0
    for comp in combinat.compositions(n, 2 * (j + 1), 0):
        lg = sum(logw[comp[2 * k] + comp[2 * k + 1]] for k in range(j + 1))
        total += math.exp(lg)
    return combinat.catalan(j) * total


def general_slot_weight(tab: CoeffTable, kind: int, i: int, j: int, s: int, t: Fraction) -> float:
    """(i+kind)!/(i+2s)! |d^s V^{i+kind,j}(t)|, the normalized slot factor."""
    e = tab.get(i + kind, j)
    if e.is_zero():
        return 0.0
    v = eval_logscaled(e.ddt_n(s), t)
    if v.sign == 0:
        return 0.0
    return math.exp(v.logmag + math.lgamma(i + kind + 1) - math.lgamma(i + 2 * s + 1))


def general_w(tab: CoeffTable, i: int, j: int, n: int, t: Fraction) -> float:
    """W^{i,j}_n = i!/(i+2n-2)! |d^n V^{i,j}(t)|."""
    if i + 2 * n < 2:
        raise ValueError("W needs i + 2n >= 2")
    v = eval_logscaled(tab.get(i, j).ddt_n(n), t)
    if v.sign == 0:
        return 0.0
    return math.exp(v.logmag + math.lgamma(i + 1) - math.lgamma(i + 2 * n - 1))


def _falling_power_abs(theta: Fraction, s0: int) -> Fraction:
    # |d^s0 t^(-Theta)| = |prod_{r<s0} (Theta + r)| t^(-Theta - s0)
    return abs(math.prod((theta + r for r in range(s0)), start=Fraction(1)))


def general_majorant(tab: CoeffTable, i: int, j: int, n: int, t: Fraction) -> float:
    """Right side of the slot-decomposition inequality for W^{i,j}_n.

    sum_{abc} |q_abc| sum_{2 s0 + sum(i_k + 2 s_k) = i + 2n - 2, sum j_k = j - 1}
        |d^s0 t^(-Theta_abc)| / (2 s0)!  prod_k (i_k+m_k)!/(i_k+2s_k)! |d^s_k V^{i_k+m_k, j_k}|

    computed as a convolution over slots with x-weight i_k + 2 s_k.
    """
    budget = i + 2 * n - 2
    if budget < 0 or j < 1:
        return 0.0
    tf = float(t)
    # slot generating tables G[kind][w, jj] = sum over i_k + 2 s_k = w of the slot factor
    G = []
    for kind in range(3):
        g = np.zeros((budget + 1, j))
        for jj in range(j):
            for w in range(budget + 1):
                tot = 0.0
                for s in range(w // 2 + 1):
                    ii = w - 2 * s
                    if ii + kind > tab.I:
                        continue
                    tot += general_slot_weight(tab, kind, ii, jj, s, t)
                g[w, jj] = tot
        G.append(g)

    def conv(A: np.ndarray, B: np.ndarray) -> np.ndarray:
        out = np.zeros_like(A)
        for w in range(budget + 1):
            for jj in range(j):
                out[w, jj] = sum(
                    A[w1, j1] * B[w - w1, jj - j1] for w1 in range(w + 1) for j1 in range(jj + 1)
                )
        return out

    total = 0.0
    for (a, b, c), q in tab.Q.items():
        acc = np.zeros((budget + 1, j))
        acc[0, 0] = 1.0
        for kind, cnt in ((0, a), (1, b), (2, c)):
            for _ in range(cnt):
                acc = conv(acc, G[kind])
        Theta = -tab.theta.tpow((a, b, c))
        for s0 in range(budget // 2 + 1):
            coef = float(_falling_power_abs(Theta, s0)) * tf ** (-float(Theta) - s0) / math.factorial(2 * s0)
            if coef == 0.0:
                continue
            total += abs(float(q)) * coef * acc[budget - 2 * s0, j - 1]
    return total


def catalan_bound_check(tab: CoeffTable, t_grid: Sequence[RationalLike], m_max: int,
                        i_max: int | None = None, j_max: int | None = None,
                        form: str = "auto") -> list[BoundCertificate]:
    """Evaluate both sides of the majorant inequality on a t grid.

    ``quadratic`` (Q = u^2, theta = 0): W^{2i,j}_m <= Cat(j) sum prod W^{2i_k,0}_{m_k},
    indexed by the half-order i.  ``general``: the slot-decomposition inequality,
    indexed by the full order i.
    """
    if form == "auto":
        quad = tab.Q.is_pure_quadratic() and tab.Q.coeffs.get((2, 0, 0)) == 1 and all(
            v == 0 for v in tab.theta.as_tuple()
        )
        form = "quadratic" if quad else "general"
    j_max = min(tab.J, J_LIMIT) if j_max is None else j_max
    ts = [as_rational(t) for t in t_grid]
    certs = []
    if form == "quadratic":
        i_max = tab.I // 2 if i_max is None else i_max
        if i_max + m_max > QUAD_LIMIT or j_max > J_LIMIT or 2 * i_max > tab.I:
            cost = math.comb(i_max + m_max + 2 * (j_max + 1), 2 * (j_max + 1))
            raise ValueError(f"index range too large (about {cost} compositions per point)")
        for j in range(j_max + 1):
            for i in range(i_max + 1):
                for m in range(m_max + 1):
                    if i + m > QUAD_LIMIT:
                        continue
                    lhs = tuple(quadratic_w(tab, i, j, m, t) for t in ts)
                    rhs = tuple(quadratic_majorant(i, j, m, t) for t in ts)
                    ok = all(l <= r * (1 + 1e-12) for l, r in zip(lhs, rhs))
                    certs.append(BoundCertificate(i, j, m, "quadratic", tuple(map(float, ts)), lhs, rhs, ok))
    elif form == "general":
        i_max = tab.I if i_max is None else i_max
        if j_max > J_LIMIT:
            raise ValueError("j range too large for the general certificate")
        for j in range(1, j_max + 1):
            for i in range(2, i_max + 1):
                for n in range(m_max + 1):
                    if i + 2 * n > tab.I or i + n > QUAD_LIMIT:
                        continue
                    lhs = tuple(general_w(tab, i, j, n, t) for t in ts)
                    rhs = tuple(general_majorant(tab, i, j, n, t) for t in ts)
                    ok = all(l <= r * (1 + 1e-12) for l, r in zip(lhs, rhs))
                    certs.append(BoundCertificate(i, j, n, "general", tuple(map(float, ts)), lhs, rhs, ok))
    else:
        raise ValueError(f"unknown form {form!r}")
    return certs


# ---------------------------------------------------------------------------
# Domain certificate and convergence


@dataclass
class DomainCertificate:
    domain: EvalDomain
    eps: float
    C_eps: float
    C_prod: float
    max_ratio: float
    passed: bool
    boundary: list = field(default_factory=list)


def _majorant_ratio(x2: float, t: float, eps: float, C_eps: float, C: float) -> float:
    # C_eps^2 x^2 exp(-eps/t^2 + C x^2/(eps t)): the geometric ratio of the j-series
    expo = -eps / (t * t) + C * x2 / (eps * t)
    return C_eps**2 * x2 * math.exp(min(expo, 700.0))


def domain_certificate(Q: QTaylor, theta: ExponentProfile, eps: RationalLike, t_max: float = 0.5,
                       n_boundary: int = 200, k_max: int = 20, c_grid: Sequence[float] | None = None) -> DomainCertificate:
    """Largest c on a geometric grid with the majorant ratio < 1/2 on |x|^2 = c/t.

    C_eps is the measured phi-derivative constant on (0, t_max] and C the
    measured product-estimate constant over the tested composition range.
    Only the quadratic majorant is implemented; other Q are refused.
    """
    eps_q = as_rational(eps)
    if not 0 < eps_q < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not (Q.is_pure_quadratic() and all(v == 0 for v in theta.as_tuple())):
        raise NotImplementedError("domain certificate implemented for Q = q u^2, theta = 0")
    q = abs(float(Q.coeffs.get((2, 0, 0), 0)))
    e = float(eps_q)
    tg = [t_max * (k + 1) / n_boundary for k in range(n_boundary)]
    C_eps = phi_bound_check(k_max, eps_q, [as_rational(t) for t in tg]).constant
    C_prod = max(
        combinat.prod_estimate_check(i, k, v)
        for i in range(1, 21) for k in range(1, 7) for v in (0, 1, 2) if i >= k
    )
    C = max(C_prod, 1.0) * max(q, 1.0)
    if c_grid is None:
        c_grid = [10.0 ** (-k / 20) for k in range(0, 121)]
    for c in sorted(c_grid, reverse=True):
        ratios = [_majorant_ratio(c / t, t, e, C_eps, C) for t in tg]
        if max(ratios) < 0.5:
            dom = EvalDomain(c, t_max)
            return DomainCertificate(dom, e, C_eps, C, max(ratios), True, list(zip(tg, ratios)))
    raise ValueError(f"no admissible c found at t_max={t_max}; try a smaller t_max")


@dataclass
class ConvergenceReport:
    I0: int | None
    passed: bool
    rows: list  # (x, t, I, rel_increment)


def partial_sum_convergence(tab: CoeffTable, points: Sequence[tuple[float, float]], s: float = 1,
                            step: int = 2, domain: EvalDomain | None = None) -> ConvergenceReport:
    """Smallest I0 with |S_{I+step} - S_I| / |S_I| <= 2^-(I - I0) for all I >= I0 tested.

    Partial sums are over i <= I; the relative increments are computed from
    exact PhiExpr differences, so no float cancellation enters.
    """
    rows = []
    per_point = []
    for x, t in points:
        if domain is not None and not domain.contains(x, t):
            raise ValueError(f"point {(x, t)} is outside the certified domain")
        xq, tq, sq = as_rational(x), as_rational(t), as_rational(s)
        incs = []
        for I in range(0, tab.I - step + 1, step):
            base = _weighted_sum(tab, xq, sq, I, tab.J)
            nxt = _weighted_sum(tab, xq, sq, I + step, tab.J)
            sv = eval_logscaled(base, tq)
            dv = eval_logscaled(nxt - base, tq)
            rel = 0.0 if dv.sign == 0 else math.exp(dv.logmag - sv.logmag)
            incs.append((I, rel))
            rows.append((float(x), float(t), I, rel))
        per_point.append(incs)
    I0 = None
    candidates = sorted({I for incs in per_point for I, _ in incs})
    for cand in candidates:
        ok = all(rel <= 2.0 ** (-(I - cand)) for incs in per_point for I, rel in incs if I >= cand)
        if ok:
            I0 = cand
            break
    return ConvergenceReport(I0, I0 is not None, rows)


@lru_cache(maxsize=8)
def cached_quadratic_table(I: int, J: int) -> CoeffTable:
    return build_coeff_table(QTaylor.quadratic(), ExponentProfile(), I, J)
