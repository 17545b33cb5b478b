import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from flatseries import tikhonov as tk
from flatseries.exactexpr import LogScaled, iterated_exp


def test_phi_eval_matches_closed_form():
    t = Fraction(1, 3)
    assert float(tk.phi_eval(0, t)) == pytest.approx(math.exp(-9), rel=1e-14)
    assert float(tk.phi_eval(1, t)) == pytest.approx(2 * 27 * math.exp(-9), rel=1e-14)
    with pytest.raises(ValueError):
        tk.phi_eval(0, 0)


def test_phi_bound_constant_is_tight():
    rep = tk.phi_bound_check(8, Fraction(1, 2), tk.rational_grid("1/10", "1", "1/10"))
    assert rep.passed
    assert rep.max_ratio == pytest.approx(1.0)
    assert rep.constant > 0


def test_phi_bound_constant_grows_as_eps_shrinks_to_one():
    grid = tk.rational_grid("1/20", "1", "1/20")
    c_half = tk.phi_bound_check(10, Fraction(1, 2), grid).constant
    c_near_one = tk.phi_bound_check(10, Fraction(9, 10), grid).constant
    assert c_near_one > c_half


def test_phi_bound_rejects_bad_eps():
    with pytest.raises(ValueError):
        tk.phi_bound_check(3, 1, [Fraction(1, 2)])


def test_bound_report_csv_uses_17_digits():
    rep = tk.phi_bound_check(2, Fraction(1, 2), [Fraction(1, 2)])
    lines = rep.to_csv().strip().splitlines()
    assert lines[0].startswith("t,k")
    assert len(lines) == 4
    assert tk.fmt17(0.1) == "0.10000000000000001"


@pytest.mark.parametrize("K", [0, 1, 4])
def test_truncated_series_leaves_single_tail(K):
    u = tk.TruncatedU0(K)
    out = tk.u0_apply_pde(u)
    p, tail = tk.u0_tail_expr(u)
    assert out == {p: tail}


def test_truncated_series_backward_heat():
    u = tk.TruncatedU0(3, sigma=-1)
    p, tail = tk.u0_tail_expr(u)
    assert tk.u0_apply_pde(u) == {p: tail}


@pytest.mark.parametrize("x,t", [("1/2", "1/2"), ("1", "3/5"), ("3/2", "1")])
def test_residual_exact_tail_matches_finite_differences(x, t):
    r = tk.u0_residual(tk.TruncatedU0(4), Fraction(x), Fraction(t), h=1e-4)
    assert r.fd_residual == pytest.approx(float(r.exact_tail), rel=1e-6)


def test_u0_eval_matches_mpmath_series():
    u = tk.TruncatedU0(6)
    x, t = Fraction(3, 4), Fraction(2, 5)
    with mpmath.workdps(40):
        ref = tk._u0_mp(u, mpmath.mpf(3) / 4, mpmath.mpf(2) / 5)
    assert float(tk.u0_eval(u, x, t)) == pytest.approx(float(ref), rel=1e-12)


def test_decay_holds_for_short_times():
    ok, margin = tk.u0_decay_holds(tk.TruncatedU0(10), 1.0, Fraction(1, 20), nx=21, nt=20)
    assert ok and margin > 0


@settings(max_examples=8)
@given(st.floats(min_value=0.5, max_value=2.0))
def test_decay_time_shrinks_with_radius(R):
    small = tk.u0_decay_check(R, 12, resolution=Fraction(1, 100), nx=21, nt=20)
    large = tk.u0_decay_check(2 * R, 12, resolution=Fraction(1, 100), nx=21, nt=20)
    assert large.T <= small.T + 1e-12


def test_phi_jet_matches_r_polynomials():
    t = Fraction(2, 3)
    jet = tk.phi_jet(t, 6)
    for i in range(7):
        assert jet.derivative(i).is_close(tk.phi_eval(i, t), 1e-10)


def test_jet_reciprocal_and_exp_inverse():
    j = tk.jet_lift([1, 2, 3], Fraction(1, 2), 5)
    one = j * j.recip()
    assert float(one.c[0]) == pytest.approx(1.0)
    assert all(abs(float(c)) < 1e-12 for c in one.c[1:])


@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_flat_germ_tower_matches_iterated_exp(N):
    t = Fraction(1, 2)
    assert tk.flat_germ_tower(N, t).compare(iterated_exp(N, 4.0)) == 0


@pytest.mark.parametrize("N", [1, 2, 3])
def test_flat_germ_recursive_bound(N):
    grid = tk.rational_grid("2/5", "1", "1/10")
    rep = tk.flat_germ_bound_check(tk.FlatGermFamily(N, Fraction(1, 2)), 8, grid)
    assert rep.passed


def test_flat_germ_closed_form_fails_for_first_germ():
    grid = tk.rational_grid("1/10", "1", "1/10")
    fam = tk.FlatGermFamily(1, Fraction(1, 10))
    assert tk.flat_germ_bound_check(fam, 10, grid).passed
    assert not tk.flat_germ_bound_check(fam, 10, grid, "closed_form").passed


def test_flat_germ_underflow_is_reported():
    with pytest.raises(OverflowError):
        tk.flat_germ_jets(3, Fraction(1, 100), 4)


def test_lemma_chain_on_flat_germs():
    grid = [Fraction(1, 2), Fraction(9, 10)]
    results = tk.flat_germ_chain_checks(2, grid, 8, 0.5)
    assert results
    assert all(lr.hypothesis_ok and lr.report.passed for _, _, lr in results)


@given(st.fractions(min_value=-3, max_value=3), st.fractions(min_value=Fraction(1, 100), max_value=2))
def test_rational_grid_is_exact(a, h):
    g = tk.rational_grid(a, a + 5 * h, h)
    assert len(g) == 6
    assert all(isinstance(q, Fraction) for q in g)
    assert g[-1] == a + 5 * h
