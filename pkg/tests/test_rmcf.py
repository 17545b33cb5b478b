import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from flatseries import rmcf
from flatseries.exactexpr import LogScaled, Tower


@pytest.mark.parametrize("D", [3, 5, 7, 9])
def test_plane_taylor_against_sympy(D):
    p, q = sympy.symbols("p q")
    expr = -q * p**2 / (1 + p**2)
    poly = sympy.Poly(sympy.series(expr, p, 0, D).removeO(), p, q)
    expected = {(0, int(i), int(j)): Fraction(int(c.p), int(c.q)) for (i, j), c in poly.terms()}
    assert rmcf.q_taylor_plane(D).coeffs == expected


def test_cylinder_model():
    Q = rmcf.GraphModel("cylinder", Fraction(1, 2)).q_taylor()
    assert Q.coeffs == {(2, 0, 0): Fraction(-1, 2)}
    with pytest.raises(ValueError):
        rmcf.GraphModel("cylinder")
    with pytest.raises(ValueError):
        rmcf.GraphModel("sphere")


def test_cylinder_with_remainder():
    from flatseries.expansion import QTaylor

    extra = QTaylor({(2, 0, 0): 1, (0, 2, 0): 3}, 2)
    Q = rmcf.q_taylor_cylinder_quadratic(2, qtilde=extra)
    assert Q.coeffs == {(2, 0, 0): Fraction(-1), (0, 2, 0): Fraction(3)}


def test_plane_profile_cancels_powers():
    theta = rmcf.exponent_profile_rmcf()
    assert all(theta.tpow(k) == 0 for k in rmcf.q_taylor_plane(9).coeffs)


def test_plane_table_has_half_integer_powers():
    tab = rmcf.build_plane_table(8, 2, 5)
    assert rmcf.half_integer_tpows(tab)


coords = st.floats(min_value=-10, max_value=10)
neg_times = st.floats(min_value=-50, max_value=-1e-3)


@given(coords, neg_times, coords)
def test_rescaling_round_trip(y, t, u):
    x, tau, v = rmcf.to_rmcf(y, t, u)
    y2, t2, u2 = rmcf.to_mcf(x, tau, v)
    assert float(y2) == pytest.approx(y, rel=1e-12, abs=1e-12)
    assert float(t2) == pytest.approx(t, rel=1e-12)
    assert float(u2) == pytest.approx(u, rel=1e-12, abs=1e-12)


def test_rescaling_map_direction():
    fwd = rmcf.RescalingMap("mcf->rmcf")
    assert fwd.inverse().direction == "rmcf->mcf"
    x, tau, v = fwd(2.0, -4.0, 6.0)
    assert (float(x), float(tau), float(v)) == pytest.approx((1.0, -math.log(4.0), 3.0))
    with pytest.raises(ValueError):
        rmcf.to_rmcf(1.0, 0.5, 1.0)


def test_self_similar_shrinker_is_static():
    # u = sqrt(-2t) is the shrinking cylinder radius; rescaled it is constant
    t = -np.geomspace(1e-3, 10, 7)
    _, _, v = rmcf.to_rmcf(np.zeros_like(t), t, np.sqrt(-2 * t))
    assert np.allclose(v, math.sqrt(2))


def test_iterated_exp_small_levels():
    assert float(rmcf.iterated_exp_eval(0, 3)) == pytest.approx(3)
    assert float(rmcf.iterated_exp_eval(2, 1)) == pytest.approx(math.exp(math.e))


def test_iterated_exp_overflow_message():
    with pytest.raises(OverflowError, match="max N"):
        rmcf.iterated_exp_eval(4, 4)
    with pytest.raises(OverflowError):
        rmcf.iterated_exp_tower(rmcf.MAX_LEVEL + 1, 1)


def test_domain_membership():
    assert rmcf.domain_member(1, 50.0, Fraction(1, 2))  # e^4 > 50
    assert not rmcf.domain_member(1, 60.0, Fraction(1, 2))
    assert rmcf.domain_member(4, 1e300, Fraction(1, 2))


def test_decay_certificate():
    taus = np.linspace(1.0, 5.0, 9)
    cert = rmcf.decay_certificate(lambda tau: LogScaled.exp(-math.exp(tau) * 2), 2, taus)
    assert cert.passed
    slow = rmcf.decay_certificate(lambda tau: math.exp(-tau), 2, taus)
    assert not slow.decreasing


def test_tower_identity_rows():
    rows = rmcf.flat_germ_tower_identity(4, [Fraction(1, 2), Fraction(1)])
    assert all(r.holds for r in rows)


def test_power_step_rows():
    rows = rmcf.power_step_lower_bound(5, [Fraction(1, 2), Fraction(1)])
    assert rows and all(r.holds for r in rows)


def test_double_exponential_small_n_fails():
    rows = {(r.N, r.t): r.holds for r in rmcf.double_exponential_lower_bound(4, [Fraction(1, 2), Fraction(1)])}
    # e^{o0}(1/t^2) = 1/t^2 is far below exp(1/t^2)
    assert rows[(0, 0.5)] is False and rows[(0, 1.0)] is False
    assert rows[(4, 0.5)] is True


def test_times_e_tower():
    tw = Tower(2, 3.0)
    assert rmcf._times_e(tw).compare(tw) == 1
