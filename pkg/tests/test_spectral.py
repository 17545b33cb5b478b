import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite_e

from flatseries import spectral as sp
from flatseries.odelemma import seeded_rng

GRID = sp.WeightedGrid.gauss(40, 32)


def test_eigenvalues():
    assert sp.eigenvalue(0, 0) == 1
    assert sp.eigenvalue(1, 0) == sp.eigenvalue(0, 1) == Fraction(1, 2)
    assert sp.eigenvalue(1, 1) == 0 and sp.eigenvalue(2, 1) == Fraction(-1, 2)
    # general formula, e.g. n = 3, k = 1
    assert sp.eigenvalue(0, 2, n=3, k=1) == 1 - Fraction(2 * 3, 4)


def test_mode_validation():
    with pytest.raises(ValueError):
        sp.EigenMode(0, 1)
    with pytest.raises(ValueError):
        sp.EigenMode(1, 0, "cos")


def test_zero_eigenspace():
    assert sp.modes_at(0) == [sp.EigenMode(2, 0), sp.EigenMode(1, 1, "cos"), sp.EigenMode(1, 1, "sin")]
    assert sp.modes_at(Fraction(1, 3)) == []


@given(st.integers(-40, 2).map(lambda n: Fraction(n, 2)))
def test_multiplicity_matches_eigenspace(lam):
    assert sp.spectrum(-30).get(lam, 0) == len(sp.modes_at(lam))


def test_lattice_and_gap():
    rep = sp.spectrum_lattice_check(-100)
    assert rep.passed and rep.min_gap == Fraction(1, 2)
    assert sp.spectral_gap(0) == Fraction(1, 2)
    with pytest.raises(ValueError):
        sp.spectral_gap(Fraction(1, 3))


def test_hermite_identity():
    assert sp.hermite_identity_check(30)


@pytest.mark.parametrize("m", range(8))
def test_hermite_matches_rescaled_probabilists(m):
    y = np.linspace(-3, 3, 13)
    he = hermite_e.hermeval(y / math.sqrt(2), [0] * m + [1])
    assert np.allclose(sp.hermite(m)(y), 2 ** (m / 2) * he, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("m", [0, 1, 4, 9])
def test_hermite_norm(m):
    z, w = hermite_e.hermegauss(30)
    y = math.sqrt(2) * z
    integral = math.sqrt(2) * float(np.sum(w * sp.hermite(m)(y) ** 2))
    r, p = sp.hermite(m).norm_squared()
    assert integral == pytest.approx(float(r) * math.pi ** float(p), rel=1e-12)


def test_quadrature_orthonormality():
    G = sp.gram_matrix(sp.all_modes(10, 3), GRID)
    assert np.max(np.abs(G - np.eye(len(G)))) < 1e-12


def test_projection_recovers_coefficients():
    c = sp.ModeCoefficients({sp.EigenMode(0, 0): 1.5, sp.EigenMode(3, 2, "sin"): -0.25, sp.EigenMode(5, 1, "cos"): 2.0})
    Y, TH, _ = GRID.mesh()
    back = sp.project(sp.evaluate(c, Y, TH), GRID, 8, 3)
    assert set(back.coeffs) == set(c.coeffs)
    for m, v in c.coeffs.items():
        assert back.coeffs[m] == pytest.approx(v, abs=1e-12)


def test_projection_warns_beyond_exactness():
    small = sp.WeightedGrid.gauss(6, 8)
    Y, TH, _ = small.mesh()
    with pytest.warns(UserWarning):
        sp.project(np.ones_like(Y), small, 8, 1)


@settings(max_examples=25)
@given(st.floats(0, 5), st.floats(0, 5))
def test_semigroup(s, t):
    c = sp.random_mode_set(seeded_rng(0, 1))
    a = sp.evolve_linear(sp.evolve_linear(c, s), t)
    b = sp.evolve_linear(c, s + t)
    assert a.values() == pytest.approx(b.values(), rel=1e-12)


@given(st.integers(0, 10**6), st.floats(0.1, 10).flatmap(lambda a: st.sampled_from([a, -a])))
def test_top_eigenvalue_invariant_under_scaling(seed, a):
    c = sp.random_mode_set(np.random.default_rng(seed))
    assert c.scaled(a).top_eigenvalue() == c.top_eigenvalue()


def test_single_mode_growth_rate_is_exact():
    c = sp.ModeCoefficients({sp.EigenMode(1, 1, "cos"): 1.0})
    r = sp.local_lower_bound_demo(c)
    assert r.top_eigenvalue == 0
    assert r.slope_error < 1e-10
    assert r.gram_min_eig > 0


def test_lower_bound_sees_whole_eigenspace():
    c = sp.ModeCoefficients({sp.EigenMode(2, 0): 1.0, sp.EigenMode(6, 0): 3.0})
    r = sp.local_lower_bound_demo(c, t_grid=np.linspace(20.0, 40.0, 21))
    assert r.eigenspace == sp.modes_at(0)
    assert r.slope_error < 1e-4


def _feed(frob, seed=1):
    modes = [sp.EigenMode(0, 1, "sin"), sp.EigenMode(2, 0), sp.EigenMode(1, 1, "cos"), sp.EigenMode(4, 0)]
    c0 = sp.ModeCoefficients({sp.EigenMode(2, 0): 0.4, sp.EigenMode(1, 1, "cos"): 0.3, sp.EigenMode(4, 0): 0.5})
    G = sp.random_coupling(np.random.default_rng(seed), len(modes), frob)
    return sp.mode_ode_check(c0, G, T=10.0, dt=2e-3, modes=modes)


def test_mode_ode_small_coupling_is_valid():
    r = _feed(1e-4)
    assert r.small and r.verdict.valid
    assert r.trajectory.x_plus[-1] == 0.0
    assert r.trajectory.x_plus[0] > 0


def test_mode_ode_gate_rejects_large_coupling():
    r = _feed(0.1)
    assert not r.small and r.verdict is None


def test_mode_ode_rejects_nonzero_unstable_start():
    c0 = sp.ModeCoefficients({sp.EigenMode(0, 0): 1.0})
    with pytest.raises(ValueError):
        sp.mode_ode_check(c0, np.zeros((1, 1, 1)))


def test_random_coupling_norm():
    G = sp.random_coupling(np.random.default_rng(0), 4, 0.3)
    assert np.linalg.norm(G) == pytest.approx(0.3)
    assert np.allclose(G, G.transpose(0, 2, 1))


def test_spectrum_csv(tmp_path):
    path = tmp_path / "s.csv"
    sp.write_spectrum_csv(path, -2)
    lines = path.read_text().splitlines()
    assert lines[0] == "m,l,lambda,multiplicity"
    assert lines[1] == "0,0,1,1"
