"""Command-line driver: ``flatseries <subcommand> [--config F] [--out DIR] [--seed N] ...``.

Every subcommand writes ``report.json`` plus CSV/text artifacts to ``--out``.
Exit codes: 0 all checks pass, 1 some check fails, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import acceptance, combinat, expansion, odelemma, rmcf, spectral, tikhonov
from .acceptance import Check, write_csv
from .exactexpr import format_rational
from .tikhonov import fmt17


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Typed values


def parse_int(v: Any) -> int:
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, int):
        return v
    if isinstance(v, str) and v.strip().lstrip("+-").isdigit():
        return int(v)
    raise ValueError(f"expected an integer, got {v!r}")


def parse_rational(v: Any) -> Fraction:
    if isinstance(v, bool):
        raise ValueError("expected a rational")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise ValueError(f"expected a rational like '1/3', got {v!r}")


def parse_real(v: Any) -> float:
    if isinstance(v, bool):
        raise ValueError("expected a real")
    if isinstance(v, (int, float)):
        return float(v)
    try:
        return float(Fraction(str(v).strip()))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"expected a real, got {v!r}") from None


def parse_grid(v: Any) -> list[Fraction]:
    """'start:stop:step' with rational entries, inclusive of stop."""
    if not isinstance(v, str) or v.count(":") != 2:
        raise ValueError(f"expected a grid 'start:stop:step', got {v!r}")
    parts = v.split(":")
    if any(not p.strip() for p in parts):
        raise ValueError(f"malformed grid {v!r}")
    a, b, h = (parse_rational(p) for p in parts)
    if h <= 0 or b < a:
        raise ValueError(f"grid {v!r} is empty")
    return tikhonov.rational_grid(a, b, h)


def parse_str(v: Any) -> str:
    if not isinstance(v, str):
        raise ValueError(f"expected a string, got {v!r}")
    return v


def parse_real_list(v: Any) -> list[float]:
    if isinstance(v, list):
        return [parse_real(x) for x in v]
    return [parse_real(x) for x in str(v).split(",") if x.strip()]


def choice(*options: str) -> Callable[[Any], str]:
    def parse(v: Any) -> str:
        if v not in options:
            raise ValueError(f"expected one of {options}, got {v!r}")
        return v
    parse.__name__ = "choice"
    return parse


@dataclass(frozen=True)
class Opt:
    parse: Callable[[Any], Any]
    default: Any
    help: str = ""


SCHEMAS: dict[str, dict[str, Opt]] = {
    "tikhonov": {
        "eps": Opt(parse_rational, "1/2", "epsilon in the phi-derivative bound"),
        "k_max": Opt(parse_int, 20, "largest derivative order"),
        "t_grid": Opt(parse_grid, "1/20:1:1/100", "t grid start:stop:step"),
        "R": Opt(parse_real, 2.0, "half-width of the x window"),
        "K": Opt(parse_int, 40, "truncation order of the base series"),
        "sigma": Opt(parse_int, 1, "sign in the base series (+1 or -1)"),
        "N_max": Opt(parse_int, 3, "largest flat-germ level"),
        "i_max": Opt(parse_int, 10, "largest derivative for flat germs"),
        "germ_eps": Opt(parse_rational, "1/4", "epsilon for the flat-germ bounds"),
        "germ_grid": Opt(parse_grid, "2/5:1:1/10", "t grid for the flat-germ bounds"),
        "skip_decay": Opt(parse_int, 0, "1 to skip the decay bisection"),
    },
    "expand": {
        "q": Opt(parse_str, "", "QTaylor file (lines 'i0 i1 i2 p/q'); empty means Q = u^2"),
        "theta": Opt(parse_str, "0,0,0,0", "exponent profile th0,th1,th2,th3"),
        "I": Opt(parse_int, 12, "x truncation order"),
        "J": Opt(parse_int, 4, "s truncation order"),
        "check": Opt(choice("exact", "none"), "exact", "residual check to run"),
    },
    "residual": {
        "q": Opt(parse_str, "", "QTaylor file; empty means Q = u^2"),
        "theta": Opt(parse_str, "0,0,0,0", "exponent profile"),
        "I": Opt(parse_int, 6, "x truncation order"),
        "J": Opt(parse_int, 6, "s truncation order"),
        "x": Opt(parse_real, 0.5, "evaluation point x"),
        "t": Opt(parse_real, 0.5, "evaluation time t"),
        "s": Opt(parse_real, 1.0, "perturbation parameter s"),
        "h": Opt(parse_real, 1e-4, "finite-difference step"),
        "tol": Opt(parse_real, 1e-6, "allowed |fd - exact-derivative residual|"),
    },
    "bounds": {
        "q": Opt(parse_str, "", "QTaylor file; empty means Q = u^2"),
        "theta": Opt(parse_str, "0,0,0,0", "exponent profile"),
        "I": Opt(parse_int, 8, "x truncation order"),
        "J": Opt(parse_int, 3, "s truncation order"),
        "m_max": Opt(parse_int, 2, "largest t-derivative order"),
        "t_grid": Opt(parse_grid, "1/10:1/2:1/10", "t grid"),
        "form": Opt(choice("auto", "quadratic", "general"), "auto", "majorant form"),
        "eps": Opt(parse_rational, "1/2", "epsilon for the domain certificate"),
        "t_max": Opt(parse_real, 0.5, "domain certificate horizon"),
    },
    "spectrum": {
        "cutoff": Opt(parse_rational, -100, "lowest eigenvalue enumerated"),
        "m_max": Opt(parse_int, 30, "largest Hermite index for the identity check"),
        "n_sets": Opt(parse_int, 20, "random mode sets for the lower-bound demo"),
        "slope_tol": Opt(parse_real, 1e-3, "tolerance on |slope - 2 lambda*|"),
        "coupling": Opt(parse_real, 1e-4, "Frobenius norm of the quadratic mode coupling"),
    },
    "mz": {
        "seeds": Opt(parse_int, 1000, "number of seeded systems"),
        "eps_over_b": Opt(parse_real, 0.01, "coupling ratio eps/b"),
        "b": Opt(parse_real, 1.0, "gap b"),
        "b1": Opt(parse_real, 1.0, "growth rate b1"),
        "b2": Opt(parse_real, 1.0, "decay rate b2"),
        "T": Opt(parse_real, 40.0, "horizon"),
        "dt": Opt(parse_real, 1e-3, "time step"),
        "tol": Opt(parse_real, 1e-6, "inequality tolerance"),
        "mode": Opt(choice("mixed", "neutral", "stable"), "mixed", "system family"),
        "probe": Opt(parse_real_list, "", "comma-separated eps/b values for a failure-rate sweep"),
    },
    "combinat": {
        "j_max": Opt(parse_int, 14, "Catalan enumeration limit"),
        "n_max": Opt(parse_int, 12, "forest / branching limit"),
        "robbins_max": Opt(parse_int, 50, "Robbins bound limit"),
    },
    "rmcf-demo": {
        "I": Opt(parse_int, 8, "x truncation order"),
        "J": Opt(parse_int, 3, "s truncation order"),
        "D": Opt(parse_int, 7, "degree cutoff of the plane Q"),
        "N_max": Opt(parse_int, 4, "largest iterated-exponential level"),
    },
    "verify-all": {
        "determinism": Opt(parse_int, 1, "0 to skip the byte-for-byte rerun"),
    },
}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    out: Path
    seed: int

    def echo(self) -> dict:
        def show(v):
            if isinstance(v, Fraction):
                return format_rational(v)
            if isinstance(v, list):
                return [show(x) for x in v]
            if isinstance(v, float):
                return fmt17(v)
            return v
        return {"params": {k: show(v) for k, v in sorted(self.params.items())}, "out": str(self.out), "seed": self.seed}


def config_load(path: str | Path | None, subcommand: str, overrides: dict, out: str | None, seed: int | None) -> RunConfig:
    """Defaults, then the JSON file, then explicit flags; every value goes through its schema parser."""
    schema = SCHEMAS[subcommand]
    raw: dict = {}
    file_out, file_seed = None, None
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} not found")
        text = p.read_text()
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from None
            if not isinstance(data, dict):
                raise ConfigError("config file must hold a JSON object")
            data = {k.replace("-", "_"): v for k, v in data.items()}
            file_out = data.pop("out", None)
            file_seed = data.pop("seed", None)
            data.pop("subcommand", None)
            unknown = sorted(set(data) - set(schema))
            if unknown:
                raise ConfigError(f"unknown config keys: {unknown}")
            raw.update(data)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    params, bad = {}, []
    for key, opt in schema.items():
        val = raw.get(key, opt.default)
        try:
            params[key] = opt.parse(val) if not (opt.parse is parse_real_list and val == "") else []
        except ValueError as exc:
            bad.append(f"{key}: {exc}")
    try:
        seed_val = parse_int(seed if seed is not None else (file_seed if file_seed is not None else 0))
    except ValueError as exc:
        bad.append(f"seed: {exc}")
        seed_val = 0
    if bad:
        raise ConfigError("invalid config values -> " + "; ".join(bad))
    return RunConfig(subcommand, params, Path(out or file_out or "out"), seed_val)


# ---------------------------------------------------------------------------
# Subcommands


def _load_q(path: str) -> expansion.QTaylor:
    if not path:
        return expansion.QTaylor.quadratic()
    try:
        return expansion.QTaylor.from_file(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read Q file {path}: {exc}") from None


def _load_theta(text: str) -> expansion.ExponentProfile:
    try:
        return expansion.ExponentProfile.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad exponent profile {text!r}: {exc}") from None


def cmd_tikhonov(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    checks = []
    rep = tikhonov.phi_bound_check(p["k_max"], p["eps"], p["t_grid"])
    path = out / "phi_bound.csv"
    path.write_text(rep.to_csv())
    checks.append(Check("phi_bound_constant_finite", rep.passed, f"C = {fmt17(rep.constant)} at {rep.argmax()}", [path]))
    if not p["skip_decay"]:
        r = tikhonov.u0_decay_check(p["R"], p["K"], p["sigma"])
        path = write_csv(out / "decay.csv", ["R", "K", "sigma", "T", "worst_margin"],
                         [(p["R"], p["K"], p["sigma"], r.T, r.worst_margin)])
        checks.append(Check("decay_T_at_least_0.2", r.passed and r.T >= 0.2, f"T = {r.T}", [path]))
    rows, ok = [], True
    for N in range(p["N_max"] + 1):
        fr = tikhonov.flat_germ_bound_check(tikhonov.FlatGermFamily(N, p["germ_eps"]), p["i_max"], p["germ_grid"])
        rows.append((N, fr.max_ratio, "true" if fr.passed else "false"))
        ok &= fr.passed
    path = write_csv(out / "flat_germ.csv", ["N", "max_ratio", "pass"], rows)
    checks.append(Check("flat_germ_bound", ok, f"levels 0..{p['N_max']}", [path]))
    chain = tikhonov.flat_germ_chain_checks(p["N_max"], p["germ_grid"], p["i_max"], float(p["germ_eps"]))
    path = write_csv(out / "flat_germ_lemmas.csv", ["t", "k", "lemma", "max_ratio", "pass"],
                     [(t, k, lr.lemma, lr.report.max_ratio, "true" if lr.report.passed else "false") for t, k, lr in chain])
    checks.append(Check("exp_and_reciprocal_lemmas", all(lr.report.passed for _, _, lr in chain), f"{len(chain)} cases", [path]))
    return checks


def cmd_expand(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    Q, th = _load_q(p["q"]), _load_theta(p["theta"])
    t0 = time.perf_counter()
    tab = expansion.build_coeff_table(Q, th, p["I"], p["J"], record_dependencies=True)
    table_path = out / "table.txt"
    table_path.write_text(tab.to_text())
    checks = [Check("triangular_order", expansion.triangular_order_ok(tab), "recorded reads precede each entry", [table_path])]
    vs = expansion.vanishing_structure_check(tab)
    checks.append(Check("vanishing_structure", vs.passed, f"failures: {list(vs.failures) or 'none'}"))
    if p["check"] == "exact":
        res = expansion.pde_residual_exact(tab)
        path = write_csv(out / "residuals.csv", ["i", "j", "n_terms"], [(i, j, len(e)) for (i, j), e in sorted(res.items())])
        ok = expansion.residual_contract_ok(tab, res)
        checks.append(Check("exact_residual_contract", ok,
                            f"nonzero at {sorted(res)}; {time.perf_counter() - t0:.2f}s", [path]))
    return checks


def cmd_residual(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    tab = expansion.build_coeff_table(_load_q(p["q"]), _load_theta(p["theta"]), p["I"], p["J"])
    r = expansion.pde_residual_numeric(tab, p["x"], p["t"], p["s"], p["h"])
    path = write_csv(out / "residual.csv", ["x", "t", "s", "h", "fd_residual", "exact_derivative_residual"],
                     [(p["x"], p["t"], p["s"], p["h"], r.fd, r.reference)])
    ok = abs(r.fd - r.reference) <= p["tol"] and not r.step_warning
    return [Check("fd_matches_truncation_residual", ok,
                  f"fd {fmt17(r.fd)}, exact-derivative {fmt17(r.reference)}, step warning {r.step_warning}", [path])]


def cmd_bounds(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    Q, th = _load_q(p["q"]), _load_theta(p["theta"])
    tab = expansion.build_coeff_table(Q, th, p["I"], p["J"])
    try:
        certs = expansion.catalan_bound_check(tab, p["t_grid"], p["m_max"], form=p["form"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [(c.i, c.j, c.m, c.convention, t, l, r, "true" if l <= r * (1 + 1e-12) else "false")
            for c in certs for t, l, r in zip(c.t_grid, c.lhs, c.rhs)]
    path = write_csv(out / "certificates.csv", ["i", "j", "m", "form", "t", "lhs", "rhs", "pass"], rows)
    checks = [Check("majorant_certificates", all(c.passed for c in certs),
                    f"{len(certs)} index triples, worst ratio {max((c.max_ratio for c in certs), default=0):.6g}", [path])]
    try:
        dc = expansion.domain_certificate(Q, th, p["eps"], p["t_max"])
    except NotImplementedError as exc:
        checks.append(Check("domain_certificate", True, f"skipped: {exc}"))
        return checks
    except ValueError as exc:
        checks.append(Check("domain_certificate", False, str(exc)))
        return checks
    path = write_csv(out / "domain_boundary.csv", ["t", "ratio"], dc.boundary)
    checks.append(Check("domain_certificate", dc.passed, f"c = {fmt17(dc.domain.c)}, max ratio {fmt17(dc.max_ratio)}", [path]))
    return checks


def cmd_spectrum(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    path = out / "spectrum.csv"
    spectral.write_spectrum_csv(path, p["cutoff"])
    lat = spectral.spectrum_lattice_check(p["cutoff"])
    checks = [Check("spectrum_lattice_and_gap", lat.passed, f"{lat.n_eigenvalues} eigenvalues, min gap {lat.min_gap}", [path]),
              Check("hermite_identity", spectral.hermite_identity_check(p["m_max"]), f"m <= {p['m_max']}")]
    g = spectral.WeightedGrid.gauss(40, 32)
    G = spectral.gram_matrix(spectral.all_modes(10, 3), g)
    err = float(np.max(np.abs(G - np.eye(len(G)))))
    checks.append(Check("quadrature_orthonormality", err <= 1e-10, f"max deviation {err:.3g}"))
    rng = odelemma.seeded_rng(cfg.seed, 7)
    rows, worst, gmin = [], 0.0, math.inf
    for k in range(p["n_sets"]):
        c = spectral.random_mode_set(rng)
        r = spectral.local_lower_bound_demo(c, spectral.Window(0.0, 1.0, 0.0, math.pi / 2))
        worst, gmin = max(worst, r.slope_error), min(gmin, r.gram_min_eig)
        rows.append((k, " ".join(m.label() for m in c.modes), str(r.top_eigenvalue), r.slope, r.slope_error, r.gram_min_eig))
    path = write_csv(out / "lower_bound.csv", ["set", "modes", "top_eigenvalue", "slope", "slope_error", "gram_min_eig"], rows)
    checks.append(Check("local_lower_bound", worst <= p["slope_tol"] and gmin > 1e-8,
                        f"worst slope error {worst:.3g}, min Gram eigenvalue {gmin:.3g}", [path]))
    checks.append(_mode_ode_feed(rng, p["coupling"], out))
    return checks


def _mode_ode_feed(rng, frob: float, out: Path) -> Check:
    """Small quadratic coupling on five modes around lambda = 0, fed to the ODE lemma."""
    modes = [spectral.EigenMode(0, 1, "sin"), spectral.EigenMode(2, 0), spectral.EigenMode(1, 1, "cos"),
             spectral.EigenMode(4, 0), spectral.EigenMode(3, 1, "cos")]
    start = {m: float(rng.uniform(0.2, 1.0)) for m in modes if m.eigenvalue <= 0}
    G = spectral.random_coupling(rng, len(modes), frob)
    r = spectral.mode_ode_check(spectral.ModeCoefficients(start), G, T=10.0, dt=2e-3, modes=modes)
    path = out / "mode_ode.csv"
    r.trajectory.to_csv(path)
    if not r.small:
        return Check("mode_ode_feed", False, f"coupling too large: eps_eff {r.eps_eff:.3g}, gap {r.gap}", [path])
    v = r.verdict
    return Check("mode_ode_feed", v.valid, f"eps_eff {r.eps_eff:.3g}, branch {v.branch}, sweeps {r.sweeps}", [path])


def cmd_mz(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    try:
        params = odelemma.MZParams(p["b"], p["b1"], p["b2"], p["eps_over_b"] * p["b"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = odelemma.run_suite(cfg.seed, p["seeds"], params, p["T"], p["dt"], p["tol"], p["mode"],
                             explore=p["eps_over_b"] > 0.1)
    vpath = write_csv(out / "verdicts.csv", ["index", "mode", "branch", "valid", "s0", "decay_rate"],
                      [(v["index"], v["mode"], str(v["branch"]), "true" if v["valid"] else "false",
                        "" if v["s0"] is None else v["s0"], "" if v["decay_rate"] is None else v["decay_rate"])
                       for v in res.verdicts])
    spath = write_csv(out / "sweep.csv", ["eps_over_b", "n_seeds", "failures"], [(p["eps_over_b"], res.n, res.invalid)])
    checks = [Check("all_verdicts_valid", res.passed,
                    f"hypothesis failures {res.hyp_failures}, invalid {res.invalid}, inconclusive {res.inconclusive}, "
                    f"branches {res.branches}", [vpath, spath])]
    if p["probe"]:
        rows = odelemma.epsilon_threshold_probe(p["probe"], min(p["seeds"], 200), cfg.seed)
        ppath = write_csv(out / "probe.csv", ["eps_over_b", "n_seeds", "failures", "regenerated"],
                          [(r["eps_over_b"], r["n_seeds"], r["failures"], r["regenerated"]) for r in rows])
        # exploration only: there is no known threshold to test against, so the probe never fails the run
        checks.append(Check("threshold_probe", True, f"monotone failure rate: {rows[0]['monotone']}", [ppath]))
    return checks


def cmd_combinat(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    checks = []
    rows = [(j, combinat.catalan(j), combinat.count_dyck_words(j)) for j in range(p["j_max"] + 1)]
    path = write_csv(out / "catalan.csv", ["j", "catalan", "dyck_words"], rows)
    checks.append(Check("catalan_vs_enumeration", all(a == b for _, a, b in rows), f"j <= {p['j_max']}", [path]))
    checks.append(Check("forest_identity", all(combinat.forest_identity_check(n) for n in range(2, p["n_max"] + 1)),
                        f"n <= {p['n_max']}"))
    checks.append(Check("variable_branching_shifted",
                        all(combinat.variable_branching_bound_check(n, 0) for n in range(p["n_max"] + 1)),
                        f"L + j0 <= {p['n_max']}"))
    rows = [(conv, str(combinat.first_binary_failure(conv, 20))) for conv in combinat.BINARY_CONVENTIONS]
    path = write_csv(out / "binary_identity.csv", ["convention", "first_failure"], rows)
    # reported, not asserted: the printed shifted form is known to fail
    checks.append(Check("binary_identity_conventions_reported", True, str(dict(rows)), [path]))
    checks.append(Check("multinomial_split", all(combinat.multinomial_split_check(*c) for c in combinat.all_multinomial_cases(4, 4)),
                        "X, Y, Z <= 4"))
    checks.append(Check("balanced_maximizer",
                        all(combinat.balanced_maximizer_check(i, k, v) for i in range(1, 21) for k in range(1, 7)
                            for v in (0, 1, 2) if i >= k), "i <= 20, k <= 6"))
    checks.append(Check("robbins", combinat.robbins_check(p["robbins_max"]), f"n <= {p['robbins_max']}"))
    return checks


def cmd_rmcf_demo(cfg: RunConfig) -> list[Check]:
    p, out = cfg.params, cfg.out
    Q = rmcf.q_taylor_plane(p["D"])
    qpath = out / "q_plane.txt"
    qpath.write_text(Q.to_text())
    tab = expansion.build_coeff_table(Q, rmcf.exponent_profile_rmcf(), p["I"], p["J"])
    tpath = out / "table_plane.txt"
    tpath.write_text(tab.to_text())
    ok = expansion.residual_contract_ok(tab) and rmcf.half_integer_tpows(tab)
    checks = [Check("plane_table_contract", ok, f"(I, J) = ({p['I']}, {p['J']})", [qpath, tpath])]
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 11]))
    y, t, u = rng.normal(size=50), -rng.uniform(0.01, 5, 50), rng.normal(size=50)
    back = rmcf.to_mcf(*rmcf.to_rmcf(y, t, u))
    err = max(float(np.max(np.abs(a - b) / np.maximum(1, np.abs(b)))) for a, b in zip(back, (y, t, u)))
    checks.append(Check("rescaling_round_trip", err <= 1e-12, f"max error {err:.3g}"))
    grid = [Fraction(k, 20) for k in range(1, 21)]
    ident = rmcf.flat_germ_tower_identity(p["N_max"], grid)
    lower = rmcf.double_exponential_lower_bound(p["N_max"], [Fraction(1, 2), Fraction(1)])
    path = write_csv(out / "iterated_exp.csv", ["check", "N", "t", "holds"],
                     [("identity", r.N, r.t, "true" if r.holds else "false") for r in ident]
                     + [("exp_e^N_lower", r.N, r.t, "true" if r.holds else "false") for r in lower])
    checks.append(Check("tower_identity", all(r.holds for r in ident), f"N <= {p['N_max']}", [path]))
    checks.append(Check("exp_e^N_lower_bound", all(r.holds for r in lower),
                        f"fails at {[(r.N, r.t) for r in lower if not r.holds] or 'none'}"))
    return checks


def cmd_verify_all(cfg: RunConfig) -> list[Check]:
    checks = acceptance.run_all(cfg.out, cfg.seed, determinism=bool(cfg.params["determinism"]))
    for c in checks:
        print(c.line(), file=sys.stderr)
    return checks


COMMANDS: dict[str, Callable[[RunConfig], list[Check]]] = {
    "tikhonov": cmd_tikhonov,
    "expand": cmd_expand,
    "residual": cmd_residual,
    "bounds": cmd_bounds,
    "spectrum": cmd_spectrum,
    "mz": cmd_mz,
    "combinat": cmd_combinat,
    "rmcf-demo": cmd_rmcf_demo,
    "verify-all": cmd_verify_all,
}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flatseries", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=f"run the {name} checks")
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("--seed", help="master seed (default: 0)")
        for key, opt in schema.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{opt.help} (default: {opt.default})")
    return parser


def _relpath(p: Path, out: Path) -> str:
    try:
        return str(Path(p).relative_to(out))
    except ValueError:
        return str(p)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    overrides = {k: getattr(ns, k) for k in SCHEMAS[ns.subcommand]}
    try:
        cfg = config_load(ns.config, ns.subcommand, overrides, ns.out, ns.seed)
        cfg.out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        checks = COMMANDS[ns.subcommand](cfg)
    except ConfigError as exc:
        print(f"flatseries {ns.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    artifacts = sorted({_relpath(p, cfg.out) for c in checks for p in c.artifacts})
    report = {
        "subcommand": cfg.subcommand,
        "config": cfg.echo(),
        "checks": [c.as_report() for c in checks],
        "artifacts": artifacts,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    (cfg.out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    failed = [c.name for c in checks if not c.passed]
    print(f"{cfg.subcommand}: {len(checks) - len(failed)}/{len(checks)} checks passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return 1 if failed else 0


def main() -> None:
    sys.exit(run())
