"""Regenerate the frozen oracle values used in tests/test_oracles.py.

Everything here is computed with sympy directly from the PDE, without
importing the package: the unknown coefficients a_ij(t) of u = sum a_ij x^i s^j
are solved from (d/dt + d^2/dx^2) u = s t^th0 Q(t^th1 u, t^th2 u', t^th3 u'')
by matching coefficients of x^i s^j one at a time.
"""

from __future__ import annotations

import json
import sys

import sympy as sp

t, x, s = sp.symbols("t x s", positive=True)
PHI = sp.exp(-1 / t**2)


def solve_table(q: dict, theta: tuple, I: int, J: int) -> dict:
    a = {}
    for i in range(I + 1):
        a[(i, 0)] = (-1) ** (i // 2) * sp.diff(PHI, t, i // 2) / sp.factorial(i) if i % 2 == 0 else sp.Integer(0)
    th0, th1, th2, th3 = (sp.Rational(v) for v in theta)
    for j in range(1, J + 1):
        a[(0, j)] = a[(1, j)] = sp.Integer(0)
        for i in range(I - 1):
            # the x^i s^(j-1) coefficient of Q uses only rows below j
            u = sum(a[(k, l)] * x**k * s**l for (k, l) in a if l < j and k <= i + 2)
            ux, uxx = sp.diff(u, x), sp.diff(u, x, 2)
            Qv = sum(sp.Rational(c) * (t**th1 * u) ** p0 * (t**th2 * ux) ** p1 * (t**th3 * uxx) ** p2
                     for (p0, p1, p2), c in q.items())
            poly = sp.Poly(sp.expand(t**th0 * Qv), x, s)
            rhs = poly.coeff_monomial(x**i * s ** (j - 1))
            a[(i + 2, j)] = sp.simplify((rhs - sp.diff(a[(i, j)], t)) / ((i + 1) * (i + 2)))
    return a


def values(table: dict, t0, keys) -> dict:
    return {f"{i},{j}": sp.N(table[(i, j)].subs(t, t0), 30).__str__() for (i, j) in keys}


def main() -> None:
    out = {}
    out["phi_derivatives_t_1/2"] = {k: str(sp.N(sp.diff(PHI, t, k).subs(t, sp.Rational(1, 2)), 30)) for k in range(9)}
    u2 = solve_table({(2, 0, 0): 1}, (0, 0, 0, 0), 8, 3)
    out["u2_t_1/2"] = values(u2, sp.Rational(1, 2), [(2, 1), (4, 1), (6, 1), (8, 1), (4, 2), (6, 2), (8, 2), (6, 3), (8, 3)])
    plane = solve_table({(0, 2, 1): -1, (0, 4, 1): 1}, ("-1/2", "-1/2", "0", "1/2"), 8, 2)
    out["plane_t_1/2"] = values(plane, sp.Rational(1, 2), [(6, 1), (8, 1), (8, 2)])
    mixed = solve_table({(1, 1, 0): 1, (0, 0, 2): sp.Rational(1, 2)}, ("1/2", "0", "-1/2", "1"), 6, 2)
    out["mixed_t_3/5"] = values(mixed, sp.Rational(3, 5), [(2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (4, 2), (6, 2)])
    json.dump(out, sys.stdout, indent=1)
    print()


if __name__ == "__main__":
    main()
