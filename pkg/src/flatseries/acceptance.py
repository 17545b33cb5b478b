"""The twelve acceptance checks, each writing its artifacts to a directory.

Every check returns a :class:`Check`; artifacts contain no timings so two
runs with the same seed are byte-identical.
"""

from __future__ import annotations

import csv
import filecmp
import math
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import combinat, expansion, odelemma, rmcf, spectral, tikhonov
from .exactexpr import PhiExpr
from .tikhonov import fmt17


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    artifacts: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"

    def as_report(self) -> dict:
        return {"name": self.name, "pass": self.passed, "detail": self.detail}


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt17(v) for v in row])
    return path


def _bool(b: bool) -> str:
    return "true" if b else "false"


# ---------------------------------------------------------------------------


def c01_exact_identity(out: Path, seed: int) -> Check:
    t0 = time.perf_counter()
    tab = expansion.build_coeff_table(expansion.QTaylor.quadratic(), expansion.ExponentProfile(), 12, 4)
    res = expansion.pde_residual_exact(tab)
    elapsed = time.perf_counter() - t0
    inner_zero = all(i > 10 for (i, _j) in res)
    v21 = tab.get(2, 1) == PhiExpr.phi(0) * PhiExpr.phi(0).scale(Fraction(1, 2))
    v41 = tab.get(4, 1) == (PhiExpr.phi(0) * PhiExpr.phi(1)).scale(Fraction(-1, 6))
    p1 = out / "c01_table_u2_I12_J4.txt"
    p1.write_text(tab.to_text())
    p2 = write_csv(out / "c01_residuals.csv", ["i", "j", "n_terms"], [(i, j, len(e)) for (i, j), e in sorted(res.items())])
    ok = inner_zero and v21 and v41 and elapsed <= 60
    detail = (f"nonzero residuals at {sorted(res)}; inner zero={inner_zero}; V21 ok={v21}; "
              f"V41 ok={v41}; build+check {elapsed:.2f}s")
    return Check("1 exact PDE identity", ok, detail, [p1, p2])


def c02_rmcf_profile(out: Path, seed: int) -> Check:
    tab = rmcf.build_plane_table(8, 3, 7)
    res = expansion.pde_residual_exact(tab)
    contract = expansion.residual_contract_ok(tab, res)
    half = rmcf.half_integer_tpows(tab)
    p = out / "c02_table_plane_I8_J3.txt"
    p.write_text(tab.to_text())
    detail = f"residual contract={contract}; t-exponents {sorted(map(str, tab.tpows()))} half-integer={half}"
    return Check("2 RMCF profile build", contract and half, detail, [p])


def c03_tikhonov_decay(out: Path, seed: int) -> Check:
    r = tikhonov.u0_decay_check(2.0, 40, sigma=1)
    p = write_csv(out / "c03_decay.csv", ["R", "K", "sigma", "T", "worst_margin", "holds"],
                  [(2, 40, 1, r.T, r.worst_margin, _bool(r.passed))])
    ok = r.passed and r.T >= 0.2
    detail = f"largest T on the 1/1000 lattice = {r.T} (need >= 0.2); strict at every node={r.passed}"
    return Check("3 Tikhonov decay", ok, detail, [p])


def c04_phi_bound(out: Path, seed: int) -> Check:
    eps = Fraction(1, 2)
    coarse = tikhonov.rational_grid(Fraction(1, 20), 1, Fraction(1, 100))
    fine = tikhonov.rational_grid(Fraction(1, 20), 1, Fraction(1, 200))
    a = tikhonov.phi_bound_check(20, eps, coarse)
    b = tikhonov.phi_bound_check(20, eps, fine)
    (out / "c04_phi_bound_h0.01.csv").write_text(a.to_csv())
    (out / "c04_phi_bound_h0.005.csv").write_text(b.to_csv())
    finite = math.isfinite(a.constant) and math.isfinite(b.constant)
    drift = abs(a.constant - b.constant) / b.constant
    ok = finite and drift <= 0.01
    detail = (f"C_1/2 = {a.constant:.6g} at argmax {a.argmax()} (grid 0.01), {b.constant:.6g} at "
              f"{b.argmax()} (grid 0.005); finite={finite}; relative change {drift:.4%} (need <= 1%)")
    return Check("4 phi-derivative bound", ok, detail,
                 [out / "c04_phi_bound_h0.01.csv", out / "c04_phi_bound_h0.005.csv"])


def c05_mz_suite(out: Path, seed: int) -> Check:
    t0 = time.perf_counter()
    params = odelemma.MZParams(1.0, 1.0, 1.0, 0.01)
    res = odelemma.run_suite(seed, 1000, params, T=40.0, dt=1e-3, tol=1e-6)
    elapsed = time.perf_counter() - t0
    p = write_csv(out / "c05_mz_verdicts.csv", ["index", "mode", "branch", "valid", "s0", "decay_rate"],
                  [(v["index"], v["mode"], str(v["branch"]), _bool(v["valid"]),
                    "" if v["s0"] is None else v["s0"], "" if v["decay_rate"] is None else v["decay_rate"])
                   for v in res.verdicts])
    ok = res.passed and elapsed <= 120
    detail = (f"hypothesis failures {res.hyp_failures}, invalid {res.invalid}, inconclusive {res.inconclusive}, "
              f"branches {res.branches}; {elapsed:.1f}s")
    return Check("5 ODE dichotomy suite", ok, detail, [p])


def c06_spectrum(out: Path, seed: int) -> Check:
    lat = spectral.spectrum_lattice_check(-100)
    herm = spectral.hermite_identity_check(30)
    p = out / "c06_spectrum.csv"
    spectral.write_spectrum_csv(p, -100)
    detail = (f"{lat.n_eigenvalues} eigenvalues >= -100; half-integer lattice={lat.on_lattice}; <= 1={lat.below_one}; "
              f"all gaps 1/2={lat.passed}; Hermite identity m<=30={herm}")
    return Check("6 spectrum and gap", lat.passed and herm, detail, [p])


def c07_lower_bound(out: Path, seed: int) -> Check:
    rng = odelemma.seeded_rng(seed, 7)
    window = spectral.Window(0.0, 1.0, 0.0, math.pi / 2)
    rows, worst, min_gram = [], 0.0, math.inf
    late_worst = 0.0
    for k in range(20):
        c = spectral.random_mode_set(rng)
        r = spectral.local_lower_bound_demo(c, window)
        late = spectral.local_lower_bound_demo(c, window, np.linspace(20.0, 40.0, 21))
        worst = max(worst, r.slope_error)
        late_worst = max(late_worst, late.slope_error)
        min_gram = min(min_gram, r.gram_min_eig)
        rows.append((k, " ".join(m.label() for m in c.modes), str(r.top_eigenvalue), r.slope, r.slope_error,
                     late.slope_error, r.gram_min_eig))
    p = write_csv(out / "c07_lower_bound.csv",
                  ["set", "modes", "top_eigenvalue", "slope", "slope_error", "slope_error_t20_40", "gram_min_eig"], rows)
    ok = worst <= 1e-3 and min_gram > 1e-8
    detail = (f"worst |slope - 2 lambda*| on [10,20] = {worst:.3g} (need <= 1e-3; {late_worst:.3g} on [20,40]); "
              f"min Gram eigenvalue {min_gram:.3g}")
    return Check("7 local lower-bound mechanics", ok, detail, [p])


def c08_combinatorics(out: Path, seed: int) -> Check:
    rows = []

    def add(name: str, ok: bool, note: str = "") -> None:
        rows.append((name, _bool(ok), note))

    add("catalan_vs_dyck_j<=14", all(combinat.catalan(j) == combinat.count_dyck_words(j) for j in range(15)))
    add("forest_identity_n<=12", all(combinat.forest_identity_check(n) for n in range(2, 13)))
    add("variable_branching_L+j0<=12",
        all(combinat.variable_branching_bound_check(n, 0) for n in range(0, 13)), "shifted convention")
    add("multinomial_split_xyz<=4", all(combinat.multinomial_split_check(*c) for c in combinat.all_multinomial_cases(4, 4)))
    add("balanced_maximizer_i<=20_k<=6",
        all(combinat.balanced_maximizer_check(i, k, v) for i in range(1, 21) for k in range(1, 7) for v in (0, 1, 2) if i >= k))
    add("robbins_n<=50", combinat.robbins_check(50))
    p = write_csv(out / "c08_combinatorics.csv", ["check", "pass", "note"], rows)
    ok = all(r[1] == "true" for r in rows)
    failed = [r[0] for r in rows if r[1] != "true"]
    return Check("8 combinatorics oracles", ok, f"{len(rows)} sub-checks, failed: {failed or 'none'}", [p])


def c09_flat_germ(out: Path, seed: int) -> Check:
    grid = tikhonov.rational_grid(Fraction(2, 5), 1, Fraction(1, 10))
    eps = Fraction(1, 4)
    rows, ok = [], True
    for N in range(4):
        r = tikhonov.flat_germ_bound_check(tikhonov.FlatGermFamily(N, eps), 10, grid)
        rows.append(("flat_germ", N, "", r.max_ratio, _bool(r.passed)))
        ok &= r.passed
    for t, k, lr in tikhonov.flat_germ_chain_checks(3, grid, 10, float(eps)):
        rows.append((f"lemma_{lr.lemma}", k, t, lr.report.max_ratio, _bool(lr.report.passed)))
        ok &= lr.report.passed
    p = write_csv(out / "c09_flat_germ.csv", ["check", "k", "t", "max_ratio", "pass"], rows)
    worst = max(r[3] for r in rows)
    return Check("9 flat-germ bounds", ok, f"{len(rows)} rows, worst ratio {worst:.6g}", [p])


def c10_domain_convergence(out: Path, seed: int) -> Check:
    Q, th = expansion.QTaylor.quadratic(), expansion.ExponentProfile()
    cert = expansion.domain_certificate(Q, th, Fraction(1, 2), 0.5)
    tab = expansion.cached_quadratic_table(20, 4)
    pts = []
    for t in (Fraction(1, 5), Fraction(3, 10), Fraction(2, 5), Fraction(1, 2)):
        xmax = math.sqrt(cert.domain.c / float(t))
        for frac in (Fraction(0), Fraction(1, 2), Fraction(99, 100)):
            x = Fraction(xmax).limit_denominator(10**6) * frac
            if cert.domain.contains(float(x), float(t)):
                pts.append((x, t))
    conv = expansion.partial_sum_convergence(tab, pts, s=1, domain=cert.domain)
    p1 = write_csv(out / "c10_domain_boundary.csv", ["t", "ratio"], cert.boundary)
    p2 = write_csv(out / "c10_partial_sums.csv", ["x", "t", "I", "relative_increment"], conv.rows)
    ok = cert.passed and cert.domain.c > 0 and cert.max_ratio < 0.5 and conv.passed
    detail = (f"c = {cert.domain.c:.6g} (C_eps = {cert.C_eps:.6g}, C = {cert.C_prod:.6g}), max boundary ratio "
              f"{cert.max_ratio:.4g}; I0 = {conv.I0} over {len(pts)} points")
    return Check("10 domain certificate and convergence", ok, detail, [p1, p2])


def c11_iterated_exp(out: Path, seed: int) -> Check:
    grid = [Fraction(k, 20) for k in range(1, 21)]
    ident = rmcf.flat_germ_tower_identity(4, grid)
    lower = rmcf.double_exponential_lower_bound(4, [Fraction(1, 2), Fraction(1)])
    power = rmcf.power_step_lower_bound(4, [Fraction(1, 2), Fraction(1)])
    rows = [("identity", r.N, r.t, _bool(r.holds), r.detail) for r in ident]
    rows += [("exp_e^N_lower", r.N, r.t, _bool(r.holds), r.detail) for r in lower]
    rows += [("power_e_step", r.N, r.t, _bool(r.holds), r.detail) for r in power]
    p = write_csv(out / "c11_iterated_exp.csv", ["check", "N", "t", "holds", "detail"], rows)
    id_ok = all(r.holds for r in ident)
    low_ok = all(r.holds for r in lower)
    fails = [(r.N, r.t) for r in lower if not r.holds]
    detail = (f"1/f_N = e^(oN)(1/t^2) on {len(ident)} points: {id_ok}; e^(oN)(1/t^2) >= exp(e^N/t^2): {low_ok}"
              f"{'' if low_ok else f', fails at (N,t) = {fails}'}; e^(oN) >= (e^(o(N-1)))^e: {all(r.holds for r in power)}")
    return Check("11 iterated-exponential chain", id_ok and low_ok, detail, [p])


ARTIFACT_CHECKS: list[Callable[[Path, int], Check]] = [
    c01_exact_identity, c02_rmcf_profile, c03_tikhonov_decay, c04_phi_bound, c05_mz_suite, c06_spectrum,
    c07_lower_bound, c08_combinatorics, c09_flat_germ, c10_domain_convergence, c11_iterated_exp,
]


def _timed(fn: Callable[[Path, int], Check], out: Path, seed: int) -> Check:
    t0 = time.perf_counter()
    chk = fn(out, seed)
    chk.seconds = time.perf_counter() - t0
    return chk


def run_artifact_checks(out: Path, seed: int) -> list[Check]:
    out.mkdir(parents=True, exist_ok=True)
    return [_timed(fn, out, seed) for fn in ARTIFACT_CHECKS]


def c12_determinism(out: Path, seed: int, reference: list[Check] | None = None) -> Check:
    """Rerun every artifact-producing check into a scratch directory and compare bytes."""
    if reference is None:
        reference = run_artifact_checks(out, seed)
    with tempfile.TemporaryDirectory() as tmp:
        again = run_artifact_checks(Path(tmp), seed)
        names = sorted(Path(p).name for c in reference for p in c.artifacts)
        names2 = sorted(Path(p).name for c in again for p in c.artifacts)
        same_set = names == names2
        _match, mismatch, errors = filecmp.cmpfiles(out, tmp, names, shallow=False)
    ok = same_set and not mismatch and not errors
    detail = f"{len(names)} artifacts compared byte-for-byte; mismatched: {mismatch or 'none'}"
    return Check("12 determinism", ok, detail, [])


def run_all(out: Path, seed: int, determinism: bool = True) -> list[Check]:
    checks = run_artifact_checks(out, seed)
    if determinism:
        checks.append(_timed(lambda o, s: c12_determinism(o, s, checks), out, seed))
    return checks
