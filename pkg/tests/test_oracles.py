"""Coefficient values cross-checked against an independent coefficient-matching
solver (scripts/derive_oracles.py); the numbers below are frozen from its output."""

import json
from fractions import Fraction
from pathlib import Path

import pytest

from flatseries.exactexpr import PhiExpr, eval_logscaled
from flatseries.expansion import ExponentProfile, QTaylor, build_coeff_table, build_quadratic_table
from flatseries.rmcf import build_plane_table

ORACLES = json.loads((Path(__file__).parent / "data" / "oracles.json").read_text())
REL = 1e-12


def _entries(name):
    return [(tuple(int(p) for p in k.split(",")), float(v)) for k, v in ORACLES[name].items()]


def _close(got, want):
    if want == 0.0:
        return float(got) == 0.0
    return abs(float(got) - want) <= REL * abs(want)


@pytest.mark.parametrize("k,want", [(int(k), float(v)) for k, v in ORACLES["phi_derivatives_t_1/2"].items()])
def test_phi_derivatives(k, want):
    assert _close(eval_logscaled(PhiExpr.phi(k), Fraction(1, 2)), want)


@pytest.fixture(scope="module")
def u2_table():
    return build_quadratic_table(8, 3)


@pytest.mark.parametrize("key,want", _entries("u2_t_1/2"))
def test_quadratic_coefficients(u2_table, key, want):
    assert _close(eval_logscaled(u2_table.get(*key), Fraction(1, 2)), want)


@pytest.fixture(scope="module")
def plane_table():
    # the oracle truncates the plane nonlinearity after u'^4 u''
    return build_plane_table(8, 3, 5)


@pytest.mark.parametrize("key,want", _entries("plane_t_1/2"))
def test_plane_coefficients(plane_table, key, want):
    assert _close(eval_logscaled(plane_table.get(*key), Fraction(1, 2)), want)


@pytest.fixture(scope="module")
def mixed_table():
    Q = QTaylor({(1, 1, 0): 1, (0, 0, 2): Fraction(1, 2)}, 2)
    theta = ExponentProfile(Fraction(1, 2), Fraction(0), Fraction(-1, 2), Fraction(1))
    return build_coeff_table(Q, theta, 6, 2)


@pytest.mark.parametrize("key,want", _entries("mixed_t_3/5"))
def test_mixed_profile_coefficients(mixed_table, key, want):
    assert _close(eval_logscaled(mixed_table.get(*key), Fraction(3, 5)), want)
