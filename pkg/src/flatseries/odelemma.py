"""Finite-horizon checks of the three-component ODE dichotomy lemma.

For nonnegative x+, x0, x- with

    |x0'| <= eps (x+ + x0 + x-),
    x+'  >= b1 x+ - eps (x0 + x-),
    x-'  <= -b2 x- + eps (x0 + x+),

and x+ -> 0 along a sequence, the lemma says x+ <= 2 (eps/b)(x0 + x-), and
either x- <= 8 (eps/b) x0 eventually (branch A) or x0 <= 20 (eps/b) x- for
all times with exponential decay at rate b2 - eps (branch B).

Infinite-horizon statements are tested on [0, T]: "x+ -> 0" becomes a
terminal condition x+(T) ~ 0, and "eventually" becomes "from some
s0 <= 0.8 T on".
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

PLUS_FACTOR = 2.0
BRANCH_A_FACTOR = 8.0
BRANCH_B_FACTOR = 20.0
S0_FRACTION = 0.8
MAX_RATE_DT = 0.1
MAX_REGENERATE = 20


@dataclass(frozen=True)
class MZParams:
    b: float
    b1: float
    b2: float
    eps: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("b must be positive")
        if self.b1 < self.b or self.b2 < self.b:
            raise ValueError("b1 and b2 must be >= b")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")

    @property
    def ratio(self) -> float:
        return self.eps / self.b

    def rescaled(self) -> "MZParams":
        return MZParams(1.0, self.b1 / self.b, self.b2 / self.b, self.eps / self.b)


@dataclass
class Trajectory:
    t: np.ndarray
    x_plus: np.ndarray
    x_zero: np.ndarray
    x_minus: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        arrs = [np.asarray(a, dtype=float) for a in (self.x_plus, self.x_zero, self.x_minus)]
        if any(a.shape != self.t.shape for a in arrs):
            raise ValueError("trajectory arrays must share the t-grid shape")
        if any((a < 0).any() for a in arrs):
            raise ValueError("trajectory samples must be nonnegative")
        if ((arrs[0] + arrs[1] + arrs[2]) <= 0).any():
            raise ValueError("x+ + x0 + x- must be positive at every node")
        self.x_plus, self.x_zero, self.x_minus = arrs

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def total(self) -> np.ndarray:
        return self.x_plus + self.x_zero + self.x_minus

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x_plus", "x_zero", "x_minus"])
            for row in zip(self.t, self.x_plus, self.x_zero, self.x_minus):
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def rescale_trajectory(traj: Trajectory, b: float) -> Trajectory:
    """y(s) = x(s/b): a (b, b1, b2, eps) trajectory becomes a (1, b1/b, b2/b, eps/b) one."""
    return Trajectory(traj.t * b, traj.x_plus, traj.x_zero, traj.x_minus, dict(traj.meta))


# ---------------------------------------------------------------------------
# Hypotheses


@dataclass
class HypothesisReport:
    passed: bool
    worst: dict
    first_failure: dict
    liminf_ok: bool

    def failing_node(self) -> int | None:
        nodes = [v for v in self.first_failure.values() if v is not None]
        return min(nodes) if nodes else None


class GridTooCoarse(ValueError):
    pass


def required_dt(params: MZParams) -> float:
    rate = max(params.b1, params.b2) + 3 * params.eps
    return MAX_RATE_DT / rate


def verify_hypotheses(traj: Trajectory, params: MZParams, tol: float = 1e-6,
                      liminf_rel: float = 1e-8) -> HypothesisReport:
    """Check the three differential inequalities at interior nodes by central differences.

    A violation counts when it exceeds ``tol * (1 + x+ + x0 + x-)`` at that node.
    """
    if traj.dt > required_dt(params) * (1 + 1e-12):
        raise GridTooCoarse(f"grid too coarse: dt = {traj.dt}, need dt <= {required_dt(params)}")
    dt = traj.dt
    xp, x0, xm = traj.x_plus, traj.x_zero, traj.x_minus
    S = traj.total
    d = lambda a: (a[2:] - a[:-2]) / (2 * dt)
    mid = slice(1, -1)
    scale = tol * (1 + S[mid])
    e = params.eps
    viol = {
        "zero": np.abs(d(x0)) - e * S[mid],
        "plus": (params.b1 * xp[mid] - e * (x0[mid] + xm[mid])) - d(xp),
        "minus": d(xm) - (-params.b2 * xm[mid] + e * (x0[mid] + xp[mid])),
    }
    worst, first = {}, {}
    ok = True
    for name, v in viol.items():
        excess = v - scale
        worst[name] = float(np.max(v)) if v.size else 0.0
        bad = np.nonzero(excess > 0)[0]
        first[name] = int(bad[0]) + 1 if bad.size else None
        ok &= not bad.size
    liminf_ok = bool(xp[-1] <= liminf_rel * max(float(np.max(x0 + xm)), 1e-300))
    return HypothesisReport(bool(ok and liminf_ok), worst, first, liminf_ok)


# ---------------------------------------------------------------------------
# Conclusions


@dataclass
class MZVerdict:
    hyp_ok: bool
    plus_bound_ok: bool
    branch: str | None  # "A", "B", "inconclusive" or None when hypotheses fail
    s0: float | None = None
    decay_ok: bool | None = None
    decay_rate: float | None = None
    tol: float = 1e-6
    diagnostics: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        if not (self.hyp_ok and self.plus_bound_ok):
            return False
        if self.branch == "A":
            return True
        return self.branch == "B" and bool(self.decay_ok)

    def to_json(self) -> dict:
        return asdict(self)


def _branch_a_start(traj: Trajectory, ratio: float, tol: float) -> float | None:
    ok = traj.x_minus <= BRANCH_A_FACTOR * ratio * traj.x_zero + tol * traj.total
    bad = np.nonzero(~ok)[0]
    start = 0 if not bad.size else int(bad[-1]) + 1
    if start >= len(traj.t):
        return None
    s0 = float(traj.t[start])
    return s0 if s0 <= S0_FRACTION * traj.T else None


def tail_decay_rate(traj: Trajectory, lo: float = 0.5) -> tuple[float, bool]:
    """Least-squares slope of log(x+ + x0 + x-) over [lo T, T], and whether the tail decreases."""
    mask = traj.t >= lo * traj.T
    S = traj.total[mask]
    slope = float(np.polyfit(traj.t[mask], np.log(S), 1)[0])
    return slope, bool(np.all(np.diff(S) <= 0))


def verify_conclusions(traj: Trajectory, params: MZParams, tol: float = 1e-6,
                       hyp: HypothesisReport | None = None) -> MZVerdict:
    """Plus-bound, then branch A on trailing windows, then branch B globally.

    Tolerances are relative to x+ + x0 + x- at each node, so decay alone
    never makes a branch inequality hold.
    """
    hyp = verify_hypotheses(traj, params, tol) if hyp is None else hyp
    if not hyp.passed:
        return MZVerdict(False, False, None, tol=tol, diagnostics={"hypotheses": asdict(hyp)})
    r = params.ratio
    plus_excess = traj.x_plus - PLUS_FACTOR * r * (traj.x_zero + traj.x_minus)
    plus_ok = bool(np.all(plus_excess <= tol * traj.total))
    diag = {"plus_bound_worst": float(np.max(plus_excess))}
    s0 = _branch_a_start(traj, r, tol)
    if s0 is not None:
        return MZVerdict(True, plus_ok, "A", s0=s0, tol=tol, diagnostics=diag)
    b_ok = bool(np.all(traj.x_zero <= BRANCH_B_FACTOR * r * traj.x_minus + tol * traj.total))
    if b_ok:
        rate, decreasing = tail_decay_rate(traj)
        decay_ok = decreasing and rate <= -(params.b2 - params.eps) + 1e-3
        return MZVerdict(True, plus_ok, "B", decay_ok=decay_ok, decay_rate=rate, tol=tol, diagnostics=diag)
    diag["branch_a_last_violation"] = float(
        np.max(traj.x_minus - BRANCH_A_FACTOR * r * traj.x_zero)
    )
    diag["branch_b_worst"] = float(np.max(traj.x_zero - BRANCH_B_FACTOR * r * traj.x_minus))
    return MZVerdict(True, plus_ok, "inconclusive", tol=tol, diagnostics=diag)


# ---------------------------------------------------------------------------
# Generator


def rk4_amplification(z: np.ndarray) -> np.ndarray:
    return 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24


def system_matrix(params: MZParams, theta: Sequence[float], sign: int) -> np.ndarray:
    tp, t0, tm = theta
    e = params.eps
    return np.array([
        [params.b1, -e * tp, -e * tp],
        [sign * e * t0, sign * e * t0, sign * e * t0],
        [e * tm, e * tm, -params.b2],
    ])


def solve_modal(M: np.ndarray, dt: float, n: int, conditions: Sequence[tuple[int, int, float]]) -> np.ndarray:
    """RK4 trajectory of x' = M x with mixed two-point conditions.

    Each condition (node, component, value) pins one component at node 0 or n.
    The RK4 step matrix shares M's eigenvectors, so the discrete solution is
    sum_k c_k rho_k^(node - anchor_k) v_k with rho_k = R(dt mu_k).  Growing
    modes are anchored at the final node, which keeps the solve well posed.
    """
    mu, vecs = np.linalg.eig(M.astype(complex))
    rho = rk4_amplification(dt * mu)
    if (np.abs(rho) == 0).any():
        raise ValueError("dt outside the RK4 range")
    logrho = np.log(rho)
    anchor = np.where(logrho.real > 0, n, 0)
    A = np.zeros((3, 3), dtype=complex)
    rhs = np.zeros(3, dtype=complex)
    for row, (node, comp, val) in enumerate(conditions):
        A[row] = vecs[comp] * np.exp((node - anchor) * logrho)
        rhs[row] = val
    c = np.linalg.solve(A, rhs)
    nodes = np.arange(n + 1)[:, None]
    X = (np.exp((nodes - anchor[None, :]) * logrho[None, :]) * c[None, :]) @ vecs.T
    return X.real


MODES = ("neutral", "stable", "mixed")


class GenerationFailed(ValueError):
    pass


def seeded_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master), int(index)]))


def generate_random_system(seed: int | np.random.Generator, params: MZParams, T: float = 40.0,
                           dt: float = 1e-3, mode: str = "mixed", theta: Sequence[float] | None = None,
                           explore: bool = False) -> Trajectory:
    """Random linear system meeting the hypotheses, integrated by RK4.

    ``neutral``: x0(0), x-(0) drawn, x0' has a random sign, x+(T) = 0.
    ``stable``:  x-(0) drawn, x0 decreasing with x0(T) = 0, x+(T) = 0.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if params.ratio > 0.1 and not explore:
        raise ValueError("generator expects eps/b <= 0.1 (pass explore=True to probe larger ratios)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    th = tuple(rng.uniform(0, 1, 3)) if theta is None else tuple(float(v) for v in theta)
    if mode == "mixed":
        mode = "neutral" if rng.uniform() < 0.5 else "stable"
    n = int(round(T / dt))
    if n < 2 or not math.isclose(n * dt, T, rel_tol=1e-9):
        raise ValueError("T must be a positive multiple of dt")
    if mode == "neutral":
        sign = 1 if rng.uniform() < 0.5 else -1
        x0_init, xm_init = rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0)
        conds = [(n, 0, 0.0), (0, 1, x0_init), (0, 2, xm_init)]
    else:
        sign = -1
        conds = [(n, 0, 0.0), (n, 1, 0.0), (0, 2, rng.uniform(0.5, 1.0))]
    X = solve_modal(system_matrix(params, th, sign), dt, n, conds)
    scale = float(np.max(np.abs(X)))
    # the exact boundary values are zero; clear roundoff-level negatives there
    small = (X < 0) & (X > -1e-12 * scale)
    X[small] = 0.0
    if (X < 0).any():
        raise GenerationFailed(f"negative component in generated system (mode {mode}, theta {th})")
    t = np.linspace(0.0, n * dt, n + 1)
    meta = {"mode": mode, "theta": list(th), "sign": sign}
    return Trajectory(t, X[:, 0], X[:, 1], X[:, 2], meta)


@dataclass
class SuiteResult:
    n: int
    hyp_failures: int
    invalid: int
    inconclusive: int
    branches: dict
    verdicts: list
    regenerated: int = 0

    @property
    def passed(self) -> bool:
        return self.hyp_failures == 0 and self.invalid == 0 and self.inconclusive == 0


def run_suite(master_seed: int, n: int, params: MZParams, T: float = 40.0, dt: float = 1e-3,
              tol: float = 1e-6, mode: str = "mixed", explore: bool = False) -> SuiteResult:
    verdicts = []
    counts = {"A": 0, "B": 0, "inconclusive": 0, None: 0}
    hyp_fail = invalid = 0
    regenerated = 0
    for k in range(n):
        rng = seeded_rng(master_seed, k)
        for _attempt in range(MAX_REGENERATE):
            try:
                traj = generate_random_system(rng, params, T, dt, mode, explore=explore)
                break
            except GenerationFailed:
                regenerated += 1
        else:
            raise GenerationFailed(f"seed index {k}: no admissible system after {MAX_REGENERATE} draws")
        v = verify_conclusions(traj, params, tol)
        hyp_fail += not v.hyp_ok
        invalid += not v.valid
        counts[v.branch] += 1
        verdicts.append({"index": k, "mode": traj.meta["mode"], "branch": v.branch, "valid": v.valid,
                         "s0": v.s0, "decay_rate": v.decay_rate})
    branches = {str(k): v for k, v in counts.items() if v}
    return SuiteResult(n, hyp_fail, invalid, counts["inconclusive"], branches, verdicts, regenerated)


def epsilon_threshold_probe(ratios: Sequence[float], n_seeds: int, master_seed: int = 0,
                            T: float = 20.0, dt: float = 1e-3, tol: float = 1e-6) -> list[dict]:
    """Failure rate (invalid verdicts) per eps/b with b = b1 = b2 = 1; monotonicity is reported only."""
    rows = []
    for r in ratios:
        params = MZParams(1.0, 1.0, 1.0, float(r))
        res = run_suite(master_seed, n_seeds, params, T, dt, tol, explore=True)
        rows.append({"eps_over_b": float(r), "n_seeds": n_seeds, "failures": res.invalid,
                     "failure_rate": res.invalid / n_seeds, "regenerated": res.regenerated})
    rates = [row["failure_rate"] for row in rows]
    monotone = all(a <= b for a, b in zip(rates, rates[1:]))
    for row in rows:
        row["monotone"] = monotone
    return rows
