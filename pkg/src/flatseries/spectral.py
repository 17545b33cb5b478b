"""Eigen-machinery of L = Delta - (x/2).grad + 1 on the cylinder S^1(sqrt 2) x R.

Separating variables, the axis factor is a Hermite polynomial h_m with
A h_m = -(m/2) h_m for A = d^2/dy^2 - (y/2) d/dy, and the circle factor is
cos(l theta) or sin(l theta) with Laplacian eigenvalue -l^2/2.  Hence

    lambda(m, l) = 1 - m/2 - l^2/2.

Weighted integrals use the axis weight exp(-y^2/4) and arc length sqrt(2) d theta.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import hermite_e, legendre

from .exactexpr import RationalLike, as_rational
from .odelemma import MZParams, MZVerdict, Trajectory, verify_conclusions, verify_hypotheses

RADIUS = math.sqrt(2.0)
CIRCUMFERENCE = 2 * math.pi * RADIUS


# ---------------------------------------------------------------------------
# Spectrum


@dataclass(frozen=True, order=True)
class EigenMode:
    m: int
    l: int = 0
    parity: str | None = None

    def __post_init__(self):
        if self.m < 0 or self.l < 0:
            raise ValueError("mode indices must be nonnegative")
        if self.l == 0 and self.parity is not None:
            raise ValueError("l = 0 modes carry no parity")
        if self.l > 0 and self.parity not in ("cos", "sin"):
            raise ValueError("l > 0 modes need parity 'cos' or 'sin'")

    @property
    def eigenvalue(self) -> Fraction:
        return eigenvalue(self.m, self.l)

    def label(self) -> str:
        return f"({self.m},{self.l})" if self.parity is None else f"({self.m},{self.l},{self.parity})"


def eigenvalue(m: int, l: int, n: int = 2, k: int = 1) -> Fraction:
    """-m/2 - l(l - 1 + n - k)/(2(n - k)) + 1; the model is n = 2, k = 1."""
    if m < 0 or l < 0:
        raise ValueError("indices must be nonnegative")
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    return 1 - Fraction(m, 2) - Fraction(l * (l - 1 + n - k), 2 * (n - k))


def modes_at(lam: RationalLike) -> list[EigenMode]:
    """Every mode of the model with eigenvalue lam (the full eigenspace)."""
    lam = as_rational(lam)
    target = 2 - 2 * lam  # m + l^2
    if target.denominator != 1 or target < 0:
        return []
    out = []
    l = 0
    while l * l <= target:
        m = int(target) - l * l
        if l == 0:
            out.append(EigenMode(m, 0))
        else:
            out.extend([EigenMode(m, l, "cos"), EigenMode(m, l, "sin")])
        l += 1
    return out


def spectrum(cutoff: RationalLike) -> dict[Fraction, int]:
    """Eigenvalue -> multiplicity for all eigenvalues >= cutoff, by exhaustive enumeration."""
    cutoff = as_rational(cutoff)
    out: dict[Fraction, int] = {}
    l = 0
    while eigenvalue(0, l) >= cutoff:
        m = 0
        while (lam := eigenvalue(m, l)) >= cutoff:
            out[lam] = out.get(lam, 0) + (1 if l == 0 else 2)
            m += 1
        l += 1
    return dict(sorted(out.items(), reverse=True))


def spectral_gap(lam: RationalLike, cutoff: RationalLike = -100) -> Fraction:
    lam, cutoff = as_rational(lam), as_rational(cutoff)
    if lam < cutoff:
        raise ValueError("eigenvalue below the cutoff")
    spec = spectrum(cutoff - 1)
    if lam not in spec:
        raise ValueError(f"{lam} is not an eigenvalue of the model")
    return min(abs(lam - mu) for mu in spec if mu != lam)


@dataclass(frozen=True)
class LatticeReport:
    n_eigenvalues: int
    on_lattice: bool
    below_one: bool
    min_gap: Fraction
    passed: bool


def spectrum_lattice_check(cutoff: RationalLike = -100) -> LatticeReport:
    cutoff = as_rational(cutoff)
    spec = spectrum(cutoff - 1)
    vals = [v for v in spec if v >= cutoff]
    lattice = all((2 * v).denominator == 1 for v in vals)
    below = all(v <= 1 for v in vals)
    gaps = [min(abs(v - w) for w in spec if w != v) for v in vals]
    g = min(gaps)
    ok = lattice and below and all(x == Fraction(1, 2) for x in gaps)
    return LatticeReport(len(vals), lattice, below, g, ok)


def spectrum_rows(cutoff: RationalLike) -> list[tuple[int, int, Fraction, int]]:
    """(m, l, lambda, multiplicity of the (m, l) pair) for the CSV dump."""
    cutoff = as_rational(cutoff)
    rows = []
    l = 0
    while eigenvalue(0, l) >= cutoff:
        m = 0
        while eigenvalue(m, l) >= cutoff:
            rows.append((m, l, eigenvalue(m, l), 1 if l == 0 else 2))
            m += 1
        l += 1
    return rows


# ---------------------------------------------------------------------------
# Hermite polynomials


@dataclass(frozen=True)
class HermitePoly:
    """h_m with h_0 = 1, h_1 = y, h_{m+1} = y h_m - 2m h_{m-1}; exact coefficients, low degree first."""

    m: int
    coeffs: tuple

    def derivative(self) -> tuple:
        return tuple(Fraction(k) * c for k, c in enumerate(self.coeffs))[1:]

    def apply_A(self) -> tuple:
        """Coefficients of h'' - (y/2) h'."""
        d1 = self.derivative()
        d2 = tuple(Fraction(k) * c for k, c in enumerate(d1))[1:]
        out = [Fraction(0)] * len(self.coeffs)
        for k, c in enumerate(d2):
            out[k] += c
        for k, c in enumerate(d1):
            out[k + 1] -= c / 2
        return tuple(out)

    def norm_squared(self) -> tuple[Fraction, Fraction]:
        """int h_m^2 exp(-y^2/4) dy = 2^(m+1) m! sqrt(pi), as (rational part, power of pi)."""
        return Fraction(2 ** (self.m + 1) * math.factorial(self.m)), Fraction(1, 2)

    def norm(self) -> float:
        r, p = self.norm_squared()
        return math.sqrt(float(r) * math.pi ** float(p))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for c in reversed(self.coeffs):
            out = out * y + float(c)
        return out


@lru_cache(maxsize=None)
def hermite(m: int) -> HermitePoly:
    if m < 0:
        raise ValueError("m must be nonnegative")
    prev, cur = (Fraction(1),), (Fraction(0), Fraction(1))
    if m == 0:
        return HermitePoly(0, prev)
    for k in range(1, m):
        nxt = [Fraction(0)] + list(cur)
        for i, c in enumerate(prev):
            nxt[i] -= 2 * k * c
        prev, cur = cur, tuple(nxt)
    return HermitePoly(m, cur)


def hermite_identity_check(m_max: int = 30) -> bool:
    """A h_m + (m/2) h_m = 0 coefficientwise, exactly."""
    for m in range(m_max + 1):
        h = hermite(m)
        Ah = h.apply_A()
        if any(a + Fraction(m, 2) * c != 0 for a, c in zip(Ah, h.coeffs)):
            return False
    return True


def _hermite_values(m_max: int, y: np.ndarray) -> np.ndarray:
    """Normalized h_m(y), rows m = 0..m_max, by the stable three-term recursion."""
    y = np.asarray(y, dtype=float)
    out = np.zeros((m_max + 1,) + y.shape)
    out[0] = 1.0
    if m_max >= 1:
        out[1] = y
    for k in range(1, m_max):
        out[k + 1] = y * out[k] - 2 * k * out[k - 1]
    norms = np.array([hermite(k).norm() for k in range(m_max + 1)])
    return out / norms.reshape((-1,) + (1,) * y.ndim)


def _circle_values(mode: EigenMode, theta: np.ndarray) -> np.ndarray:
    if mode.l == 0:
        return np.full_like(theta, 1 / math.sqrt(CIRCUMFERENCE), dtype=float)
    f = np.cos if mode.parity == "cos" else np.sin
    return f(mode.l * theta) / math.sqrt(CIRCUMFERENCE / 2)


def basis_values(modes: Sequence[EigenMode], y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Orthonormal eigenfunctions at paired points (y_k, theta_k); shape (len(modes), len(y))."""
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    H = _hermite_values(max((md.m for md in modes), default=0), y)
    return np.array([H[md.m] * _circle_values(md, theta) for md in modes])


# ---------------------------------------------------------------------------
# Quadrature and coefficients


@dataclass(frozen=True)
class WeightedGrid:
    y: np.ndarray
    wy: np.ndarray
    theta: np.ndarray
    wtheta: np.ndarray
    exactness: int  # axis polynomial degree integrated exactly
    trig_exactness: int  # highest Fourier frequency integrated exactly

    @classmethod
    def gauss(cls, n_axis: int = 40, n_theta: int = 32) -> "WeightedGrid":
        z, w = hermite_e.hermegauss(n_axis)  # weight exp(-z^2/2)
        y = math.sqrt(2.0) * z
        wy = math.sqrt(2.0) * w
        theta = 2 * math.pi * np.arange(n_theta) / n_theta
        wt = np.full(n_theta, CIRCUMFERENCE / n_theta)
        return cls(y, wy, theta, wt, 2 * n_axis - 1, n_theta - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        Y, TH = np.meshgrid(self.y, self.theta, indexing="ij")
        W = np.outer(self.wy, self.wtheta)
        return Y, TH, W


@dataclass(frozen=True)
class ModeCoefficients:
    """Coefficients c_mode of a finite mode expansion at time ``time``.

    The stored numbers are the time-zero coefficients; the value at the
    current time is c exp(lambda time).  Linear evolution only moves ``time``,
    which makes the semigroup law exact in this representation.
    """

    coeffs: Mapping
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", {k: float(v) for k, v in dict(self.coeffs).items() if v != 0})

    @property
    def modes(self) -> list[EigenMode]:
        return sorted(self.coeffs)

    @property
    def M(self) -> int:
        return max((md.m for md in self.coeffs), default=0)

    @property
    def Lmax(self) -> int:
        return max((md.l for md in self.coeffs), default=0)

    def values(self) -> dict:
        return {md: c * math.exp(float(md.eigenvalue) * self.time) for md, c in sorted(self.coeffs.items())}

    def top_eigenvalue(self) -> Fraction:
        if not self.coeffs:
            raise ValueError("empty mode set has no top eigenvalue")
        return max(md.eigenvalue for md in self.coeffs)

    def scaled(self, a: float) -> "ModeCoefficients":
        return ModeCoefficients({k: a * v for k, v in self.coeffs.items()}, self.time)


def all_modes(M: int, Lmax: int) -> list[EigenMode]:
    out = []
    for l in range(Lmax + 1):
        for m in range(M + 1):
            if l == 0:
                out.append(EigenMode(m, 0))
            else:
                out.extend([EigenMode(m, l, "cos"), EigenMode(m, l, "sin")])
    return out


def project(f: np.ndarray, grid: WeightedGrid, M: int, Lmax: int, drop_below: float = 1e-12) -> ModeCoefficients:
    """Weighted inner products of grid samples f[y_i, theta_j] with the orthonormal modes."""
    if 2 * M > grid.exactness or 2 * Lmax > grid.trig_exactness:
        warnings.warn("mode cutoff exceeds quadrature exactness; coefficients are approximate", stacklevel=2)
    Y, TH, W = grid.mesh()
    f = np.asarray(f, dtype=float)
    if f.shape != Y.shape:
        raise ValueError(f"f must have shape {Y.shape}")
    modes = all_modes(M, Lmax)
    B = basis_values(modes, Y.ravel(), TH.ravel())
    c = B @ (f.ravel() * W.ravel())
    return ModeCoefficients({md: v for md, v in zip(modes, c) if abs(v) > drop_below})


def gram_matrix(modes: Sequence[EigenMode], grid: WeightedGrid) -> np.ndarray:
    Y, TH, W = grid.mesh()
    B = basis_values(modes, Y.ravel(), TH.ravel())
    return (B * W.ravel()) @ B.T


def evolve_linear(c: ModeCoefficients, t: float) -> ModeCoefficients:
    return ModeCoefficients(c.coeffs, c.time + t)


def evaluate(c: ModeCoefficients, y, theta) -> np.ndarray:
    modes = c.modes
    vals = c.values()
    B = basis_values(modes, np.ravel(y), np.ravel(theta))
    return (np.array([vals[m] for m in modes]) @ B).reshape(np.shape(y))


# ---------------------------------------------------------------------------
# Local lower bound


@dataclass(frozen=True)
class Window:
    y0: float = 0.0
    y1: float = 1.0
    th0: float = 0.0
    th1: float = math.pi / 2

    def nodes(self, n: int = 48) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gauss-Legendre tensor nodes with weight exp(-y^2/4) sqrt(2)."""
        x, w = legendre.leggauss(n)
        y = 0.5 * (self.y1 - self.y0) * (x + 1) + self.y0
        wy = 0.5 * (self.y1 - self.y0) * w * np.exp(-y * y / 4)
        th = 0.5 * (self.th1 - self.th0) * (x + 1) + self.th0
        wt = 0.5 * (self.th1 - self.th0) * w * RADIUS
        Y, TH = np.meshgrid(y, th, indexing="ij")
        return Y.ravel(), TH.ravel(), np.outer(wy, wt).ravel()


@dataclass
class LowerBoundResult:
    top_eigenvalue: Fraction
    slope: float
    log_norms: list
    gram_min_eig: float
    eigenspace: list

    @property
    def slope_error(self) -> float:
        return abs(self.slope - 2 * float(self.top_eigenvalue))


def window_log_norm(c: ModeCoefficients, window: Window, t: float, n: int = 48) -> float:
    """log of int_window u(t)^2 exp(-y^2/4) sqrt(2) dy dtheta for the linear evolution."""
    Y, TH, W = window.nodes(n)
    if not W.sum() > 0:
        raise ValueError("window has zero quadrature mass")
    lam_top = float(c.top_eigenvalue())
    modes = c.modes
    B = basis_values(modes, Y, TH)
    # factor out exp(lambda_top (time + t)) so large t never overflows
    tt = c.time + t
    coef = np.array([c.coeffs[m] * math.exp((float(m.eigenvalue) - lam_top) * tt) for m in modes])
    u = coef @ B
    return float(np.log(np.sum(W * u * u))) + 2 * lam_top * tt


def local_lower_bound_demo(c: ModeCoefficients, window: Window = Window(),
                           t_grid: Sequence[float] | None = None, n: int = 48) -> LowerBoundResult:
    if t_grid is None:
        t_grid = np.linspace(10.0, 20.0, 21)
    t_grid = np.asarray(t_grid, dtype=float)
    lam = c.top_eigenvalue()
    logs = [window_log_norm(c, window, t, n) for t in t_grid]
    slope = float(np.polyfit(t_grid, logs, 1)[0])
    space = modes_at(lam)
    Y, TH, W = window.nodes(n)
    B = basis_values(space, Y, TH)
    G = (B * W) @ B.T
    min_eig = float(np.linalg.eigvalsh(G)[0])
    return LowerBoundResult(lam, slope, logs, min_eig, space)


def random_mode_set(rng: np.random.Generator, M: int = 6, Lmax: int = 2, size: tuple[int, int] = (1, 4)) -> ModeCoefficients:
    pool = all_modes(M, Lmax)
    k = int(rng.integers(size[0], size[1] + 1))
    idx = rng.choice(len(pool), size=k, replace=False)
    return ModeCoefficients({pool[i]: float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)) for i in sorted(idx)})


# ---------------------------------------------------------------------------
# Projected nonlinear system feeding the ODE lemma


@dataclass
class ModeODEResult:
    trajectory: Trajectory
    params: MZParams | None
    eps_eff: float
    gap: float
    small: bool
    verdict: MZVerdict | None
    sweeps: int


def random_coupling(rng: np.random.Generator, n: int, frob: float) -> np.ndarray:
    G = rng.standard_normal((n, n, n))
    G = 0.5 * (G + G.transpose(0, 2, 1))
    return G * (frob / np.linalg.norm(G))


def _rk4_path(f, y0: np.ndarray, ts: np.ndarray, forcing: np.ndarray | None) -> np.ndarray:
    """RK4 on a fixed grid (ts may decrease); forcing values at nodes, midpoints by averaging."""
    ys = np.empty((len(ts),) + y0.shape)
    ys[0] = y0
    for k in range(len(ts) - 1):
        h = ts[k + 1] - ts[k]
        if forcing is None:
            g0 = g1 = gm = None
        else:
            g0, g1 = forcing[k], forcing[k + 1]
            gm = 0.5 * (g0 + g1)
        y = ys[k]
        k1 = f(y, g0)
        k2 = f(y + 0.5 * h * k1, gm)
        k3 = f(y + 0.5 * h * k2, gm)
        k4 = f(y + h * k3, g1)
        ys[k + 1] = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return ys


def mode_ode_check(c0: ModeCoefficients, coupling: np.ndarray, T: float = 20.0, dt: float = 1e-3,
                   lam: RationalLike = 0, gate: float = 0.01, tol: float = 1e-6,
                   max_sweeps: int = 60, modes: Sequence[EigenMode] | None = None) -> ModeODEResult:
    """Integrate u_i' = lambda_i u_i + sum_jk G_ijk u_j u_k and test the ODE lemma on its aggregates.

    Modes above lam are unstable; their coefficients get the terminal condition
    u_i(T) = 0 and are integrated backward, the rest forward, alternating until
    the sweeps agree.  x+, x0, x- are the norms of exp(-lam t) u over modes
    with eigenvalue above, equal to and below lam.

    ``modes`` fixes the mode set (default: the modes carried by c0); modes
    absent from c0 start at zero, which is how the unstable ones enter.
    """
    lam = as_rational(lam)
    modes = sorted(set(modes)) if modes is not None else c0.modes
    if not set(c0.coeffs) <= set(modes):
        raise ValueError("c0 has modes outside the given mode set")
    n = len(modes)
    if coupling.shape != (n, n, n):
        raise ValueError(f"coupling must have shape {(n, n, n)}")
    lams = np.array([float(m.eigenvalue) for m in modes])
    if dt * np.max(np.abs(lams)) > 2.5:
        raise ValueError("dt violates the RK4 stability bound dt |lambda| <= 2.5")
    steps = int(round(T / dt))
    ts = np.linspace(0.0, steps * dt, steps + 1)
    up = np.array([m.eigenvalue > lam for m in modes])
    eq = np.array([m.eigenvalue == lam for m in modes])
    dn = ~up & ~eq
    init = np.array([c0.coeffs.get(m, 0.0) for m in modes])
    if np.any(init[up] != 0):
        raise ValueError("modes above lam must start at zero (their values come from the terminal condition)")
    U = np.tile(init, (steps + 1, 1))
    U[:, up] = 0.0

    def rhs_all(y):
        return lams * y + np.einsum("ijk,j,k->i", coupling, y, y)

    lo_idx, hi_idx = np.nonzero(~up)[0], np.nonzero(up)[0]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        prev = U.copy()
        if lo_idx.size:
            def f_lo(y, g):
                full = g.copy()
                full[lo_idx] = y
                return rhs_all(full)[lo_idx]
            U[:, lo_idx] = _rk4_path(f_lo, init[lo_idx], ts, U.copy())
        if hi_idx.size:
            def f_hi(y, g):
                full = g.copy()
                full[hi_idx] = y
                return rhs_all(full)[hi_idx]
            back = _rk4_path(f_hi, np.zeros(hi_idx.size), ts[::-1], U[::-1].copy())
            U[:, hi_idx] = back[::-1]
        if not hi_idx.size or np.max(np.abs(U - prev)) <= 1e-14 * max(1.0, np.max(np.abs(U))):
            break
    w = np.exp(-float(lam) * ts)[:, None] * U
    agg = lambda mask: np.sqrt(np.sum(w[:, mask] ** 2, axis=1)) if mask.any() else np.zeros(len(ts))
    traj = Trajectory(ts, agg(up), agg(eq), agg(dn), {"lambda": str(lam), "modes": [m.label() for m in modes]})
    eps_eff = float(np.linalg.norm(coupling) * np.max(np.sqrt(np.sum(U**2, axis=1))))
    gaps = [float(m.eigenvalue - lam) for m in modes if m.eigenvalue > lam]
    gaps += [float(lam - m.eigenvalue) for m in modes if m.eigenvalue < lam]
    gap = min(gaps) if gaps else 0.5
    b1 = min((float(m.eigenvalue - lam) for m in modes if m.eigenvalue > lam), default=gap)
    b2 = min((float(lam - m.eigenvalue) for m in modes if m.eigenvalue < lam), default=gap)
    b = min(b1, b2) - eps_eff
    small = b > 0 and eps_eff / b <= gate
    if not small:
        return ModeODEResult(traj, None, eps_eff, gap, False, None, sweeps)
    params = MZParams(b, b1 - eps_eff, b2 - eps_eff, eps_eff)
    hyp = verify_hypotheses(traj, params, tol)
    return ModeODEResult(traj, params, eps_eff, gap, True, verify_conclusions(traj, params, tol, hyp), sweeps)


def write_spectrum_csv(path: str | Path, cutoff: RationalLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "l", "lambda", "multiplicity"])
        for m, l, lam, mult in spectrum_rows(cutoff):
            w.writerow([m, l, f"{float(lam):.17g}", mult])
