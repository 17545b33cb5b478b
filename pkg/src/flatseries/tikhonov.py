"""Tikhonov base solutions, the iterated flat germs and their derivative bounds.

The base solution is the truncated series

    u0(x, t) = sum_{k <= K} sigma^k phi^(k)(t) x^(2k) / (2k)!

which solves ``u_t = sigma u_xx`` up to a single telescoped tail term.  The
flat-germ family is ``f_0 = t^2``, ``f_{k+1} = exp(-1/f_k)``; its derivatives
are computed with truncated Taylor jets whose coefficients are log-scaled.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .exactexpr import (
    LogScaled,
    PhiExpr,
    RationalLike,
    Tower,
    as_rational,
    phi_derivative_poly,
)


# ---------------------------------------------------------------------------
# phi and its derivatives


def phi_eval(k: int, t: RationalLike) -> LogScaled:
    if k < 0:
        raise ValueError("k must be nonnegative")
    tq = as_rational(t)
    if tq <= 0:
        raise ValueError("phi_eval needs t > 0; phi^(k)(t) = 0 for t <= 0")
    s = 1 / tq
    r = phi_derivative_poly(k)(s)
    return LogScaled.from_rational(r) * LogScaled.exp(-float(s * s))


def _phi_logs(kmax: int, t: Fraction) -> tuple[np.ndarray, np.ndarray]:
    """Signs and log-magnitudes of phi^(k)(t), k = 0..kmax."""
    signs = np.zeros(kmax + 1)
    logs = np.full(kmax + 1, -np.inf)
    for k in range(kmax + 1):
        v = phi_eval(k, t)
        signs[k] = v.sign
        logs[k] = v.logmag
    return signs, logs


# ---------------------------------------------------------------------------
# Bound reports


@dataclass
class BoundReport:
    """Per-point ratios |quantity| / bound.

    ``rows`` hold (param1, param2, ratio, bound_logmag, value_logmag).  When
    the report measures a constant (as for the phi bound), the bound already
    includes the measured constant, so ``max_ratio`` is 1 by construction and
    the constant itself is in ``constant``.
    """

    name: str
    param_names: tuple[str, str]
    rows: list[tuple[float, float, float, float, float]]
    max_ratio: float
    passed: bool
    constant: float | None = None
    notes: dict = field(default_factory=dict)

    def argmax(self) -> tuple[float, float] | None:
        if not self.rows:
            return None
        r = max(self.rows, key=lambda row: row[2])
        return r[0], r[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.param_names[0], self.param_names[1], "ratio", "bound", "value_logmag"])
        for p1, p2, ratio, blog, vlog in self.rows:
            w.writerow([fmt17(p1), fmt17(p2), fmt17(ratio), fmt17(blog), fmt17(vlog)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "name": self.name,
            "max_ratio": self.max_ratio,
            "pass": self.passed,
            "constant": self.constant,
            "argmax": self.argmax(),
            "notes": self.notes,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, default=_json_default)


def fmt17(x) -> str:
    """Fixed 17-significant-digit rendering used in every artifact."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _json_default(o):
    if isinstance(o, Fraction):
        return f"{o.numerator}/{o.denominator}"
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _ratio(log_ratio: float) -> float:
    return math.exp(log_ratio) if log_ratio < 709 else math.inf


def phi_bound_check(k_max: int, eps: RationalLike, t_grid: Sequence[RationalLike]) -> BoundReport:
    """Smallest C with |phi^(k)(t)| <= C k!/(eps t)^k exp(-eps/t^2) on the grid."""
    eps_q = as_rational(eps)
    if not 0 < eps_q < 1:
        raise ValueError("eps must lie in (0, 1)")
    if len(t_grid) == 0:
        raise ValueError("empty t grid")
    eps_f = float(eps_q)
    raw = []
    for t in t_grid:
        tq = as_rational(t)
        tf = float(tq)
        for k in range(k_max + 1):
            v = phi_eval(k, tq)
            vlog = v.logmag
            blog = math.lgamma(k + 1) - k * math.log(eps_f * tf) - eps_f / (tf * tf)
            raw.append((tf, k, vlog - blog, blog, vlog))
    log_c = max(r[2] for r in raw)
    rows = [(tf, k, _ratio(lr - log_c), blog + log_c, vlog) for tf, k, lr, blog, vlog in raw]
    c = _ratio(log_c)
    return BoundReport(
        name="phi_bound",
        param_names=("t", "k"),
        rows=rows,
        max_ratio=max(r[2] for r in rows),
        passed=math.isfinite(c),
        constant=c,
        notes={"eps": eps_q, "k_max": k_max},
    )


# ---------------------------------------------------------------------------
# Truncated base solution


@dataclass(frozen=True)
class TruncatedU0:
    K: int
    sigma: int = 1

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")

    def coefficient(self, k: int) -> PhiExpr:
        """Coefficient of x^(2k)."""
        return PhiExpr.phi(k, Fraction(self.sigma**k, math.factorial(2 * k)))

    def series(self) -> dict[int, PhiExpr]:
        """x-power -> exact coefficient."""
        return {2 * k: self.coefficient(k) for k in range(self.K + 1)}


def _poly_part(u: TruncatedU0, x: Fraction, s: Fraction) -> Fraction:
    """sum_k sigma^k R_k(s) x^(2k)/(2k)!, exactly."""
    total = Fraction(0)
    x2 = x * x
    xp = Fraction(1)
    for k in range(u.K + 1):
        total += u.sigma**k * phi_derivative_poly(k)(s) * xp / math.factorial(2 * k)
        xp *= x2
    return total


def u0_eval(u: TruncatedU0, x: RationalLike, t: RationalLike) -> LogScaled:
    tq = as_rational(t)
    if tq <= 0:
        return LogScaled.zero()
    s = 1 / tq
    return LogScaled.from_rational(_poly_part(u, as_rational(x), s)) * LogScaled.exp(-float(s * s))


def u0_apply_pde(u: TruncatedU0) -> dict[int, PhiExpr]:
    """Exact coefficients of (d/dt - sigma d^2/dx^2) applied to the truncated series."""
    series = u.series()
    out: dict[int, PhiExpr] = {}
    for p, c in series.items():
        out[p] = out.get(p, PhiExpr.zero()) + c.ddt()
        if p >= 2:
            out[p - 2] = out.get(p - 2, PhiExpr.zero()) - c.scale(u.sigma * p * (p - 1))
    return {p: e for p, e in out.items() if not e.is_zero()}


def u0_tail_expr(u: TruncatedU0) -> tuple[int, PhiExpr]:
    """(x-power, coefficient) of the single term left by the truncation."""
    K = u.K
    return 2 * K, PhiExpr.phi(K + 1, Fraction(u.sigma**K, math.factorial(2 * K)))


def _u0_mp(u: TruncatedU0, x, t):
    s = 1 / t
    total = mpmath.mpf(0)
    x2 = x * x
    xp = mpmath.mpf(1)
    for k in range(u.K + 1):
        coeffs = phi_derivative_poly(k).coeffs
        r = mpmath.polyval(list(reversed(coeffs)), s)
        total += u.sigma**k * r * xp / mpmath.factorial(2 * k)
        xp *= x2
    return total * mpmath.exp(-s * s)


@dataclass(frozen=True)
class U0Residual:
    exact_tail: LogScaled
    fd_residual: float


def u0_residual(u: TruncatedU0, x: RationalLike, t: RationalLike, h: float = 1e-5, dps: int = 60) -> U0Residual:
    """Telescoped tail term and a finite-difference value of the same PDE residual.

    The finite differences use fourth-order central stencils on the truncated
    series evaluated at ``dps`` digits, so neither the O(h^2) stencil error
    nor float cancellation swamps the (typically tiny) tail.
    """
    tq = as_rational(t)
    if tq <= 0:
        raise ValueError("u0_residual needs t > 0")
    xq = as_rational(x)
    K = u.K
    tail = phi_eval(K + 1, tq) * LogScaled.from_rational(
        Fraction(u.sigma**K) * xq ** (2 * K) / math.factorial(2 * K)
    )
    with mpmath.workdps(dps):
        xm = mpmath.mpf(xq.numerator) / xq.denominator
        tm = mpmath.mpf(tq.numerator) / tq.denominator
        hm = mpmath.mpf(h)

        def f(dx, dt):
            return _u0_mp(u, xm + dx * hm, tm + dt * hm)

        u_t = (-f(0, 2) + 8 * f(0, 1) - 8 * f(0, -1) + f(0, -2)) / (12 * hm)
        u_xx = (-f(2, 0) + 16 * f(1, 0) - 30 * f(0, 0) + 16 * f(-1, 0) - f(-2, 0)) / (12 * hm * hm)
        fd = float(u_t - u.sigma * u_xx)
    return U0Residual(tail, fd)


def _u0_logabs_grid(u: TruncatedU0, xs: np.ndarray, t: Fraction) -> np.ndarray:
    """log|u0(x, t)| for an array of x, with exact fallback under cancellation."""
    signs, logs = _phi_logs(u.K, t)
    k = np.arange(u.K + 1)
    sig = signs * np.where(k % 2 == 1, u.sigma, 1)
    lfact = np.array([math.lgamma(2 * kk + 1) for kk in k])
    out = np.empty(len(xs))
    for n, x in enumerate(xs):
        if x == 0:
            out[n] = logs[0]
            continue
        terms = logs + 2 * k * math.log(abs(x)) - lfact
        m = terms.max()
        w = np.exp(terms - m)
        total = float(np.dot(sig, w))
        if abs(total) < 1e-10 * w.sum():
            exact = u0_eval(u, Fraction(float(x)), t)
            out[n] = exact.logmag
        else:
            out[n] = m + math.log(abs(total))
    return out


@dataclass(frozen=True)
class DecayResult:
    T: float
    passed: bool
    worst_margin: float  # min over nodes of (log bound - log|u0|) at the reported T
    evaluations: int


def u0_decay_holds(u: TruncatedU0, R: float, T: Fraction, nx: int = 201, nt: int = 200) -> tuple[bool, float]:
    """Strict bound |u0| < exp(-1/(2t^2)) on the (nx, nt) grid of [-R, R] x (0, T]."""
    xs = np.linspace(-R, R, nx)
    xs = np.unique(np.abs(xs))  # u0 is even in x
    worst = math.inf
    for j in range(1, nt + 1):
        t = T * j / nt
        tf = float(t)
        logb = -1.0 / (2 * tf * tf)
        margin = float(np.min(logb - _u0_logabs_grid(u, xs, t)))
        worst = min(worst, margin)
        if margin <= 0:
            return False, worst
    return True, worst


def u0_decay_check(R: float, K: int, sigma: int = 1, resolution: Fraction = Fraction(1, 1000),
                   T_max: Fraction = Fraction(1), nx: int = 201, nt: int = 200) -> DecayResult:
    """Largest T (to ``resolution``) with the decay bound holding on the grid.

    Bisection runs over the lattice T = n * resolution so that every grid node
    is an exact rational with a small denominator.
    """
    if R < 0:
        raise ValueError("R must be nonnegative")
    u = TruncatedU0(K, sigma)
    res = as_rational(resolution)
    hi = int(as_rational(T_max) / res)
    evals = 1
    ok, margin = u0_decay_holds(u, R, hi * res, nx, nt)
    if ok:
        return DecayResult(float(hi * res), True, margin, evals)
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        evals += 1
        if u0_decay_holds(u, R, mid * res, nx, nt)[0]:
            lo = mid
        else:
            hi = mid
    if lo == 0:
        return DecayResult(0.0, False, -math.inf, evals)
    ok, margin = u0_decay_holds(u, R, lo * res, nx, nt)
    return DecayResult(float(lo * res), ok, margin, evals + 1)


# ---------------------------------------------------------------------------
# Jets


class Jet:
    """Truncated Taylor expansion sum_k c_k h^k about a base point."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable[LogScaled]):
        self.c = tuple(coeffs)
        if not self.c:
            raise ValueError("a jet needs at least one coefficient")

    @property
    def order(self) -> int:
        return len(self.c) - 1

    def derivative(self, i: int) -> LogScaled:
        """i-th derivative at the base point, i! c_i."""
        return self.c[i] * LogScaled(1, math.lgamma(i + 1))

    def __neg__(self) -> "Jet":
        return Jet(-a for a in self.c)

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(a + b for a, b in zip(self.c, other.c))

    def __mul__(self, other: "Jet") -> "Jet":
        n = min(self.order, other.order)
        return Jet(LogScaled.sum(self.c[j] * other.c[k - j] for j in range(k + 1)) for k in range(n + 1))

    def scale(self, a: LogScaled) -> "Jet":
        return Jet(x * a for x in self.c)

    def recip(self) -> "Jet":
        c0 = self.c[0]
        if c0.sign == 0:
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        inv0 = LogScaled.one() / c0
        r = [inv0]
        for k in range(1, self.order + 1):
            acc = LogScaled.sum(self.c[j] * r[k - j] for j in range(1, k + 1))
            r.append(-(acc * inv0))
        return Jet(r)

    def exp(self) -> "Jet":
        e = [self.c[0].exp_of()]
        for k in range(1, self.order + 1):
            acc = LogScaled.sum(self.c[j] * e[k - j] * j for j in range(1, k + 1))
            e.append(acc / k)
        return Jet(e)

    def __repr__(self) -> str:
        return f"Jet({[float(a) for a in self.c]})"


def jet_lift(poly: Sequence[RationalLike], t: RationalLike, order: int) -> Jet:
    """Jet at base t of the polynomial sum_n poly[n] t^n (exact Taylor shift)."""
    tq = as_rational(t)
    coeffs = [as_rational(a) for a in poly]
    out = []
    for k in range(order + 1):
        ck = sum(
            (coeffs[n] * math.comb(n, k) * tq ** (n - k) for n in range(k, len(coeffs))),
            Fraction(0),
        )
        out.append(LogScaled.from_rational(ck))
    return Jet(out)


def jet_exp(j: Jet) -> Jet:
    return j.exp()


def jet_recip(j: Jet) -> Jet:
    return j.recip()


def jet_neg(j: Jet) -> Jet:
    return -j


def phi_jet(t: RationalLike, order: int) -> Jet:
    """Jet of phi = exp(-1/t^2) computed purely by jet arithmetic."""
    return flat_germ_jets(1, t, order)[1]


def flat_germ_jets(N: int, t: RationalLike, order: int) -> list[Jet]:
    """Jets of f_0 .. f_N at base t."""
    jets = [jet_lift([0, 0, 1], t, order)]
    for k in range(N):
        nxt = (-jets[-1].recip()).exp()
        if nxt.c[0].sign == 0:
            raise OverflowError(f"f_{k + 1}({t}) underflows log-scaled range; use larger t or smaller N")
        jets.append(nxt)
    return jets


def flat_germ_tower(N: int, t: RationalLike) -> Tower:
    """1/f_N(t) as a nested exponential, built along the recursion 1/f_{k+1} = exp(1/f_k)."""
    tq = as_rational(t)
    y = Tower(0, float(1 / (tq * tq)))
    for _ in range(N):
        y = y.exp()
    return y.canonical()


@dataclass(frozen=True)
class FlatGermFamily:
    N: int
    epsilon: Fraction

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be nonnegative")
        eps = as_rational(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not 0 < eps < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    def log_g(self, t: float, f_logs: Sequence[float], convention: str = "recursive") -> float:
        """log of the derivative-rate prefactor g_N at t.

        ``recursive``: g_0 = 2/t, g_{k+1} = 8 g_k / (eps f_k^eps), i.e. (8/eps)^N.
        ``closed_form``: (2/t)(8/eps)^(N-1) prod f_j^(-eps) as displayed, with g_0 = 2/t.
        """
        eps = float(self.epsilon)
        base = math.log(2.0 / t)
        if self.N == 0:
            return base
        power = {"recursive": self.N, "closed_form": self.N - 1}[convention]
        return base + power * math.log(8.0 / eps) - eps * sum(f_logs[: self.N])


def flat_germ_bound_check(fam: FlatGermFamily, i_max: int, t_grid: Sequence[RationalLike],
                          convention: str = "recursive") -> BoundReport:
    """|f_N^(i)| <= i! f_N^(1-eps) g_N^i on the grid, in log-scaled arithmetic."""
    eps = float(fam.epsilon)
    rows = []
    for t in t_grid:
        tq = as_rational(t)
        if not 0 < tq <= 1:
            raise ValueError("grid must lie in (0, 1]")
        jets = flat_germ_jets(fam.N, tq, i_max)
        f_logs = [j.c[0].logmag for j in jets]
        lg = fam.log_g(float(tq), f_logs, convention)
        fN = jets[fam.N]
        for i in range(i_max + 1):
            v = fN.derivative(i)
            blog = math.lgamma(i + 1) + (1 - eps) * f_logs[fam.N] + i * lg
            lr = v.logmag - blog if v.sign else -math.inf
            rows.append((float(tq), i, _ratio(lr) if v.sign else 0.0, blog, v.logmag))
    mr = max(r[2] for r in rows)
    return BoundReport(
        name=f"flat_germ_N{fam.N}_{convention}",
        param_names=("t", "i"),
        rows=rows,
        max_ratio=mr,
        passed=mr <= 1.0,
        notes={"N": fam.N, "eps": fam.epsilon, "convention": convention},
    )


# ---------------------------------------------------------------------------
# Lemmas on exp(f) and 1/f


@dataclass
class LemmaResult:
    lemma: str
    g: float
    hypothesis_ok: bool
    report: BoundReport


def measured_rate(f: Jet, i_max: int, power: float) -> float:
    """Smallest g with |f^(i)| <= i! g^i |f|^power for 1 <= i <= i_max (log of g)."""
    base = power * f.c[0].logmag
    best = -math.inf
    for i in range(1, i_max + 1):
        ci = f.c[i]
        if ci.sign == 0:
            continue
        best = max(best, (ci.logmag - base) / i)
    return best


def _hyp_holds(f: Jet, i_max: int, power: float, log_g: float) -> bool:
    base = power * f.c[0].logmag
    tol = 1e-12
    for i in range(1, i_max + 1):
        ci = f.c[i]
        if ci.sign and ci.logmag - base - i * log_g > tol * max(1.0, abs(base)):
            return False
    return True


def lemma_exp_check(f: Jet, i_max: int, eps: float, log_g: float | None = None, label: str = "") -> LemmaResult:
    """|(e^f)^(i)| < i! e^((1-eps) f) (2g/eps)^i given |f^(i)| <= i! g^i |f|, f < 0."""
    if f.c[0].sign >= 0:
        raise ValueError("the exponential lemma needs f < 0")
    lg = measured_rate(f, i_max, 1.0) if log_g is None else log_g
    hyp = _hyp_holds(f, i_max, 1.0, lg)
    ef = f.exp()
    f0 = float(f.c[0])
    rows = []
    for i in range(1, i_max + 1):
        blog = (1 - eps) * f0 + i * (math.log(2 / eps) + lg)
        v = ef.c[i]
        lr = v.logmag - blog if v.sign else -math.inf
        rows.append((float(i), 0.0, _ratio(lr) if v.sign else 0.0, blog, v.logmag))
    mr = max((r[2] for r in rows), default=0.0)
    rep = BoundReport(f"lemma_exp{label}", ("i", "unused"), rows, mr, hyp and mr < 1.0,
                      notes={"log_g": lg, "hypothesis_ok": hyp})
    return LemmaResult("exp", math.exp(lg) if lg < 709 else math.inf, hyp, rep)


def lemma_recip_check(f: Jet, i_max: int, eps: float, log_g: float | None = None, label: str = "") -> LemmaResult:
    """|(1/f)^(i)| <= i! (4g)^i |f|^(-1-i eps) given |f^(i)| <= i! g^i |f|^(1-eps)."""
    if f.c[0].sign == 0:
        raise ValueError("the reciprocal lemma needs f != 0")
    lg = measured_rate(f, i_max, 1 - eps) if log_g is None else log_g
    hyp = _hyp_holds(f, i_max, 1 - eps, lg)
    rf = f.recip()
    lf = f.c[0].logmag
    rows = []
    for i in range(1, i_max + 1):
        blog = i * (math.log(4.0) + lg) - (1 + i * eps) * lf
        v = rf.c[i]
        lr = v.logmag - blog if v.sign else -math.inf
        rows.append((float(i), 0.0, _ratio(lr) if v.sign else 0.0, blog, v.logmag))
    mr = max((r[2] for r in rows), default=0.0)
    rep = BoundReport(f"lemma_recip{label}", ("i", "unused"), rows, mr, hyp and mr <= 1.0,
                      notes={"log_g": lg, "hypothesis_ok": hyp, "abs_f_le_1": lf <= 0})
    return LemmaResult("recip", math.exp(lg) if lg < 709 else math.inf, hyp, rep)


def lemma_func_checks(f_samples: Sequence[Jet], i_max: int, eps: float,
                      g_profile: Sequence[float] | None = None, which: str = "both") -> list[LemmaResult]:
    """Run the exp and/or reciprocal lemma on each sampled germ.

    ``g_profile`` optionally supplies log g per sample; otherwise the minimal
    g meeting each hypothesis is measured from the jet.
    """
    out = []
    for n, f in enumerate(f_samples):
        lg = None if g_profile is None else g_profile[n]
        if which in ("both", "exp") and f.c[0].sign < 0:
            out.append(lemma_exp_check(f, i_max, eps, lg, f"_{n}"))
        if which in ("both", "recip") and f.c[0].sign != 0:
            out.append(lemma_recip_check(f, i_max, eps, lg, f"_{n}"))
    return out


def flat_germ_chain_checks(N: int, t_grid: Sequence[RationalLike], i_max: int, eps: float) -> list[tuple[float, int, LemmaResult]]:
    """Reciprocal lemma on f_k and exponential lemma on -1/f_k for k < N."""
    out = []
    for t in t_grid:
        jets = flat_germ_jets(N, t, i_max)
        for k in range(N):
            out.append((float(as_rational(t)), k, lemma_recip_check(jets[k], i_max, eps, label=f"_f{k}")))
            out.append((float(as_rational(t)), k, lemma_exp_check(-jets[k].recip(), i_max, eps, label=f"_f{k}")))
    return out


def rational_grid(start: RationalLike, stop: RationalLike, step: RationalLike) -> list[Fraction]:
    """Inclusive arithmetic grid with exact rational nodes."""
    a, b, h = as_rational(start), as_rational(stop), as_rational(step)
    if h <= 0:
        raise ValueError("step must be positive")
    n = int((b - a) / h + Fraction(1, 10**9))
    return [a + h * k for k in range(n + 1)]
