"""Graph-model inputs for (rescaled) mean curvature flow, rescaling maps and
iterated-exponential certificates.

Graphs over a line evolve by u_t = u'' / (1 + u'^2) (the perturbation being
-u'' u'^2 / (1 + u'^2)); rotationally symmetric graphs over the round
cylinder pick up a quadratic term -Cq u^2 plus a user-supplied remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exactexpr import LogScaled, RationalLike, Tower, as_rational, iterated_exp
from .expansion import CoeffTable, ExponentProfile, QTaylor, build_coeff_table
from .tikhonov import flat_germ_tower

MAX_LEVEL = 6


@dataclass(frozen=True)
class GraphModel:
    kind: str
    Cq: Fraction | None = None

    def __post_init__(self):
        if self.kind not in ("plane", "cylinder"):
            raise ValueError("kind must be 'plane' or 'cylinder'")
        if self.kind == "cylinder":
            if self.Cq is None or as_rational(self.Cq) <= 0:
                raise ValueError("cylinder model needs Cq > 0")
            object.__setattr__(self, "Cq", as_rational(self.Cq))

    def q_taylor(self, cutoff: int = 7, qtilde: QTaylor | None = None) -> QTaylor:
        if self.kind == "plane":
            return q_taylor_plane(cutoff)
        return q_taylor_cylinder_quadratic(self.Cq, cutoff, qtilde)


def q_taylor_plane(D: int) -> QTaylor:
    """-u'' u'^2 / (1 + u'^2) = sum_m (-1)^(m+1) u'^(2m+2) u''."""
    if D < 3:
        raise ValueError("plane model needs cutoff D >= 3")
    coeffs = {(0, 2 * m + 2, 1): Fraction((-1) ** (m + 1)) for m in range((D - 3) // 2 + 1)}
    return QTaylor(coeffs, D)


def q_taylor_cylinder_quadratic(Cq: RationalLike, cutoff: int = 2, qtilde: QTaylor | None = None) -> QTaylor:
    Cq = as_rational(Cq)
    if Cq <= 0:
        raise ValueError("Cq must be positive")
    base = QTaylor({(2, 0, 0): -Cq}, max(cutoff, 2))
    return base if qtilde is None else base.merged(qtilde)


def exponent_profile_rmcf() -> ExponentProfile:
    return ExponentProfile(Fraction(-1, 2), Fraction(-1, 2), Fraction(0), Fraction(1, 2))


def build_plane_table(I: int = 8, J: int = 3, D: int = 7) -> CoeffTable:
    return build_coeff_table(q_taylor_plane(D), exponent_profile_rmcf(), I, J)


def half_integer_tpows(tab: CoeffTable) -> bool:
    return all((2 * p).denominator == 1 for p in tab.tpows())


# ---------------------------------------------------------------------------
# Rescaling: u(y, t) = sqrt(-t) v(y / sqrt(-t), -ln(-t))


def to_rmcf(y, t, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y, t, u = (np.asarray(a, dtype=float) for a in (y, t, u))
    if np.any(t >= 0):
        raise ValueError("MCF side needs t < 0")
    r = np.sqrt(-t)
    return y / r, -np.log(-t), u / r


def to_mcf(x, tau, v) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, tau, v = (np.asarray(a, dtype=float) for a in (x, tau, v))
    r = np.exp(-tau / 2)
    return x * r, -np.exp(-tau), v * r


@dataclass(frozen=True)
class RescalingMap:
    direction: str  # "mcf->rmcf" or "rmcf->mcf"

    def __post_init__(self):
        if self.direction not in ("mcf->rmcf", "rmcf->mcf"):
            raise ValueError("direction must be 'mcf->rmcf' or 'rmcf->mcf'")

    def __call__(self, coord, time, value):
        return (to_rmcf if self.direction == "mcf->rmcf" else to_mcf)(coord, time, value)

    def inverse(self) -> "RescalingMap":
        return RescalingMap("rmcf->mcf" if self.direction == "mcf->rmcf" else "mcf->rmcf")


# ---------------------------------------------------------------------------
# Iterated exponentials


def _check_level(N: int) -> None:
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N > MAX_LEVEL:
        raise OverflowError(f"nested representation supports N <= {MAX_LEVEL}")


def iterated_exp_tower(N: int, x: RationalLike) -> Tower:
    _check_level(N)
    return iterated_exp(N, float(as_rational(x)))


def iterated_exp_eval(N: int, x: RationalLike) -> LogScaled:
    """e^{oN}(x) as a log-scaled number; refuses when even the log overflows."""
    tw = iterated_exp_tower(N, x)
    try:
        return tw.to_logscaled()
    except OverflowError:
        max_n = max(k for k in range(N + 1) if iterated_exp(k, float(as_rational(x))).level <= 1)
        raise OverflowError(f"e^(o{N})({x}) exceeds log-scaled range; max N here is {max_n}") from None


def domain_member(N: int, x: float, t: RationalLike) -> bool:
    """|x| <= e^{oN}(1/t^2), decided by comparing iterated logarithms."""
    tq = as_rational(t)
    if tq <= 0:
        raise ValueError("t must be positive")
    return Tower(0, abs(float(x))) <= iterated_exp_tower(N, 1 / (tq * tq))


@dataclass
class DecayCertificate:
    N: int
    log_products: list
    decreasing: bool
    below_threshold: bool

    @property
    def passed(self) -> bool:
        return self.decreasing and self.below_threshold


def decay_certificate(u_eval: Callable[[float], LogScaled | float], N: int, tau_grid: Sequence[float],
                      threshold: float = 1e-6) -> DecayCertificate:
    """|u(tau)| e^{oN}(tau) decreasing along tau_grid and below threshold at the last node.

    Works with log|u| + e^{o(N-1)}(tau), which must be a finite double.
    """
    _check_level(N)
    logs = []
    for tau in tau_grid:
        val = u_eval(tau)
        v = val if isinstance(val, LogScaled) else LogScaled.from_float(float(val))
        if v.sign == 0:
            logs.append(-math.inf)
            continue
        if N == 0:
            lw = math.log(tau) if tau > 0 else -math.inf
        else:
            tw = iterated_exp(N - 1, float(tau))
            if tw.level > 0:
                raise OverflowError(f"e^(o{N})({tau}) has no finite log; reduce N or tau")
            lw = tw.top
        logs.append(v.logmag + lw)
    decreasing = all(b <= a for a, b in zip(logs, logs[1:]))
    return DecayCertificate(N, logs, decreasing, logs[-1] < math.log(threshold))


# ---------------------------------------------------------------------------
# Iterated-exponential chain


@dataclass
class ChainRow:
    N: int
    t: float
    holds: bool
    detail: str


def flat_germ_tower_identity(N_max: int, t_grid: Sequence[RationalLike]) -> list[ChainRow]:
    """1/f_N(t) = e^{oN}(1/t^2), comparing the recursion-built tower with the direct one.

    Where 1/f_N is a finite double it is also recomputed by plain float recursion.
    """
    rows = []
    for N in range(N_max + 1):
        for t in t_grid:
            tq = as_rational(t)
            rec = flat_germ_tower(N, tq)
            direct = iterated_exp_tower(N, 1 / (tq * tq))
            same = rec == direct
            detail = f"level {direct.level} top {direct.top:.17g}"
            if direct.level == 0:
                y = 1 / float(tq) ** 2
                for _ in range(N):
                    y = math.exp(y)
                same &= math.isclose(y, direct.top, rel_tol=1e-12)
            rows.append(ChainRow(N, float(tq), same, detail))
    return rows


def double_exponential_lower_bound(N_max: int, t_values: Sequence[RationalLike]) -> list[ChainRow]:
    """e^{oN}(1/t^2) >= exp(e^N / t^2), compared through iterated logs."""
    rows = []
    for N in range(N_max + 1):
        for t in t_values:
            tq = as_rational(t)
            lhs = iterated_exp_tower(N, 1 / (tq * tq))
            rhs = Tower(1, math.e**N / float(tq) ** 2).canonical()
            rows.append(ChainRow(N, float(tq), lhs >= rhs, f"cmp={lhs.compare(rhs)}"))
    return rows


def power_step_lower_bound(N_max: int, t_values: Sequence[RationalLike]) -> list[ChainRow]:
    """e^{oN}(y) >= (e^{o(N-1)}(y))^e for N >= 2, i.e. e^{o(N-1)}(y) >= e * e^{o(N-2)}(y)."""
    rows = []
    for N in range(2, N_max + 1):
        for t in t_values:
            tq = as_rational(t)
            y = 1 / (tq * tq)
            lhs = iterated_exp_tower(N - 1, y)
            inner = iterated_exp_tower(N - 2, y)
            rhs = _times_e(inner)
            rows.append(ChainRow(N, float(tq), lhs >= rhs, f"cmp={lhs.compare(rhs)}"))
    return rows


def _times_e(tw: Tower) -> Tower:
    c = tw.canonical()
    if c.level == 0:
        return Tower(0, math.e * c.top)
    # e * exp(z) = exp(z + 1)
    return _add_to_exponent(c, 1.0)


def _add_to_exponent(tw: Tower, delta: float) -> Tower:
    """exp(log(tw) + delta) with log taken one level down."""
    below = Tower(tw.level - 1, tw.top).canonical()
    if below.level == 0:
        return Tower(1, below.top + delta).canonical()
    # log(tw) is itself a tower of level >= 1; adding delta is negligible at double precision
    return tw


def large_k_power_inequality(N_max: int, t_values: Sequence[RationalLike], eps: RationalLike = Fraction(1, 10)) -> list[ChainRow]:
    """(e^{o(N-1)}(y))^{(1/4)(2/5 - eps)} >= e^{o(N-2)}(y), reported only.

    In logs: (1/4)(2/5 - eps) e^{o(N-2)}(y) >= e^{o(N-3)}(y).
    """
    c = float(Fraction(1, 4) * (Fraction(2, 5) - as_rational(eps)))
    rows = []
    for N in range(3, N_max + 1):
        for t in t_values:
            tq = as_rational(t)
            y = 1 / (tq * tq)
            a = iterated_exp_tower(N - 2, y)
            b = iterated_exp_tower(N - 3, y)
            if a.level == 0:
                holds = c * a.top >= b.canonical().top if b.level == 0 else False
            else:
                # c * exp(z) = exp(z + ln c); compare logs one level down
                holds = _add_to_exponent(a, math.log(c)) >= b
            rows.append(ChainRow(N, float(tq), holds, f"factor={c:.17g}"))
    return rows
