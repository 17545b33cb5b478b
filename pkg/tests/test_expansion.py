from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from flatseries import expansion as ex
from flatseries.exactexpr import PhiExpr, eval_float, eval_logscaled

U2 = ex.QTaylor.quadratic()
FLAT = ex.ExponentProfile()

triples = st.sampled_from([(2, 0, 0), (1, 1, 0), (0, 2, 0), (1, 0, 1), (0, 1, 1), (3, 0, 0), (0, 2, 1)])
coeffs = st.fractions(min_value=-2, max_value=2, max_denominator=4).filter(lambda q: q != 0)
q_taylors = st.dictionaries(triples, coeffs, min_size=1, max_size=3).map(lambda d: ex.QTaylor(d, 3))
halves = st.integers(-2, 2).map(lambda n: Fraction(n, 2))
profiles = st.tuples(halves, halves, halves, halves).map(lambda t: ex.ExponentProfile(*t))


@pytest.fixture(scope="module")
def u2_table():
    return ex.build_coeff_table(U2, FLAT, 12, 4, record_dependencies=True)


def test_first_entries(u2_table):
    assert u2_table.get(2, 0) == PhiExpr.phi(1, Fraction(-1, 2))
    assert u2_table.get(2, 1) == PhiExpr.monomial(Fraction(1, 2), 0, (0, 0))
    assert u2_table.get(4, 1) == PhiExpr.monomial(Fraction(-1, 6), 0, (0, 1))


def test_base_row():
    assert ex.base_entry(3).is_zero()
    assert ex.base_entry(4) == PhiExpr.phi(2, Fraction(1, 24))


def test_vanishing_pattern(u2_table):
    assert ex.vanishing_structure_check(u2_table).passed


def test_triangular_dependencies(u2_table):
    assert ex.triangular_order_ok(u2_table)


def test_dependencies_needed():
    with pytest.raises(ValueError):
        ex.triangular_order_ok(ex.build_coeff_table(U2, FLAT, 4, 1))


def test_closed_form_equals_recurrence(u2_table):
    closed = ex.build_quadratic_table(12, 4)
    assert all(closed.get(i, j) == u2_table.get(i, j) for i in range(13) for j in range(5))


def test_residual_only_in_last_rows(u2_table):
    res = ex.pde_residual_exact(u2_table)
    assert res
    assert {i for i, _ in res} <= {11, 12}
    assert ex.residual_contract_ok(u2_table, res)


@settings(max_examples=15)
@given(q_taylors, profiles)
def test_residual_contract_for_random_inputs(Q, theta):
    tab = ex.build_coeff_table(Q, theta, 6, 2)
    assert ex.residual_contract_ok(tab)
    assert ex.vanishing_structure_check(tab, quadratic=False).passed


@settings(max_examples=15)
@given(q_taylors, profiles, st.sampled_from([Fraction(2), Fraction(-1, 3)]))
def test_scaling_q_scales_rows(Q, theta, lam):
    a = ex.build_coeff_table(Q, theta, 6, 2)
    b = ex.build_coeff_table(Q.scaled(lam), theta, 6, 2)
    for (i, j), e in a.entries():
        assert b.get(i, j) == e.scale(lam**j)


def test_plane_like_profile_gives_half_integer_powers():
    Q = ex.QTaylor({(0, 2, 1): -1}, 3)
    theta = ex.ExponentProfile(Fraction(-1, 2), Fraction(-1, 2), 0, Fraction(1, 2))
    tab = ex.build_coeff_table(Q, theta, 8, 2)
    assert all((2 * p).denominator == 1 for p in tab.tpows())


def test_qtaylor_validation():
    with pytest.raises(ValueError):
        ex.QTaylor({(1, 0, 0): 1}, 2)
    with pytest.raises(ValueError):
        ex.QTaylor({(2, 1, 0): 1}, 2)
    with pytest.raises(ValueError):
        ex.QTaylor({(2, 0): 1}, 2)
    assert ex.QTaylor({(2, 0, 0): 0}, 2).coeffs == {}


@given(q_taylors)
def test_qtaylor_text_round_trip(Q):
    assert ex.QTaylor.from_text(Q.to_text()).coeffs == Q.coeffs


def test_qtaylor_text_errors():
    with pytest.raises(ValueError):
        ex.QTaylor.from_text("2 0 1/2")
    q = ex.QTaylor.from_text("# comment\n2 0 0 3/4\n\n")
    assert q.coeffs == {(2, 0, 0): Fraction(3, 4)}


def test_exponent_profile_parse():
    p = ex.ExponentProfile.parse("-1/2, -1/2, 0, 1/2")
    assert p.tpow((0, 2, 1)) == Fraction(0)
    with pytest.raises(ValueError):
        ex.ExponentProfile.parse("1,2,3")


def test_table_text_headers(u2_table):
    txt = u2_table.to_text()
    assert txt.startswith("[0,0]\n1/1 t^{0/1} phi[0]\n")
    body = txt.split("\n[4,1]\n", 1)[1].split("\n[", 1)[0]
    assert PhiExpr.from_text(body) == u2_table.get(4, 1)


def test_s_zero_reduces_to_base_series(u2_table):
    from flatseries.tikhonov import TruncatedU0, u0_eval

    u0 = TruncatedU0(6, sigma=-1)
    for x, t in [(Fraction(1, 2), Fraction(1, 2)), (Fraction(3, 2), Fraction(4, 5))]:
        a = ex.eval_us(u2_table, x, t, 0)
        b = u0_eval(u0, x, t)
        assert a.is_close(b, 1e-12)


def test_numeric_residual_agrees_with_exact_derivatives():
    tab = ex.cached_quadratic_table(6, 6)
    r = ex.pde_residual_numeric(tab, 0.5, 0.5, 1.0, h=1e-4)
    assert abs(r.fd - r.reference) < 1e-6
    assert not r.certified and not r.step_warning


def test_certified_flag_uses_domain():
    tab = ex.cached_quadratic_table(6, 2)
    dom = ex.EvalDomain(0.01, 0.5)
    _, inside = ex.eval_us_checked(tab, 0.1, 0.4, 1, dom)
    _, outside = ex.eval_us_checked(tab, 2.0, 0.4, 1, dom)
    assert inside and not outside


def test_quadratic_certificate_first_ratio(u2_table):
    grid = [Fraction(k, 10) for k in range(1, 6)]
    certs = ex.catalan_bound_check(u2_table, grid, m_max=2, i_max=4, j_max=2)
    assert all(c.passed for c in certs)
    first = next(c for c in certs if (c.i, c.j, c.m) == (1, 1, 0))
    assert first.max_ratio == pytest.approx(0.5)


def test_general_certificate_for_mixed_q():
    Q = ex.QTaylor({(1, 1, 0): 1, (0, 0, 2): Fraction(1, 2)}, 2)
    theta = ex.ExponentProfile(Fraction(1, 2), 0, Fraction(-1, 2), 1)
    tab = ex.build_coeff_table(Q, theta, 8, 2)
    certs = ex.catalan_bound_check(tab, [Fraction(1, 2), Fraction(3, 5)], m_max=1)
    assert certs and all(c.convention == "general" for c in certs)
    assert all(c.passed for c in certs)


def test_certificate_range_guard(u2_table):
    with pytest.raises(ValueError, match="compositions"):
        ex.catalan_bound_check(u2_table, [Fraction(1, 2)], m_max=9, i_max=6)


def test_domain_certificate_quadratic():
    cert = ex.domain_certificate(U2, FLAT, Fraction(1, 2))
    assert cert.passed and cert.max_ratio < 0.5
    assert cert.domain.c > 0
    assert cert.domain.contains(0.0, 0.25)


def test_domain_certificate_refuses_other_q():
    with pytest.raises(NotImplementedError):
        ex.domain_certificate(ex.QTaylor({(1, 1, 0): 1}, 2), FLAT, Fraction(1, 2))


def test_partial_sums_converge_inside_domain():
    tab = ex.cached_quadratic_table(16, 3)
    dom = ex.domain_certificate(U2, FLAT, Fraction(1, 2)).domain
    pts = [(0.05, 0.2), (0.1, 0.4)]
    rep = ex.partial_sum_convergence(tab, pts, domain=dom)
    assert rep.passed and rep.I0 is not None
    with pytest.raises(ValueError):
        ex.partial_sum_convergence(tab, [(10.0, 0.4)], domain=dom)


def test_eval_before_time_zero_is_zero():
    tab = ex.cached_quadratic_table(4, 1)
    assert ex.eval_us(tab, 1, -1, 1).sign == 0
