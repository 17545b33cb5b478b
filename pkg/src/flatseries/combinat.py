"""Exact combinatorics behind the series majorants.

Two Catalan indexings are in use and every function that cares takes the
convention explicitly:

* ``"standard"``: Cat(j) = binom(2j, j)/(j+1), Cat(0) = 1.
* ``"shifted"``:  C_n = Cat(n-1) = binom(2n-2, n-1)/n, C_1 = 1.

Each identity has a brute-force counterpart so the closed forms are never
checked against themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterator, Sequence

import mpmath

CONVENTIONS = ("standard", "shifted")


def _check_convention(convention: str) -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown Catalan convention {convention!r}")


def catalan(j: int, convention: str = "standard") -> int:
    _check_convention(convention)
    if convention == "shifted":
        if j < 1:
            raise ValueError("shifted Catalan numbers start at n = 1")
        j -= 1
    if j < 0:
        raise ValueError("Catalan index must be nonnegative")
    return math.comb(2 * j, j) // (j + 1)


def count_dyck_words(j: int) -> int:
    """Number of balanced parenthesis strings of length 2j, by enumeration."""
    count = 0
    # explicit stack of (opens used, closes used)
    stack = [(0, 0)]
    while stack:
        o, c = stack.pop()
        if o == j and c == j:
            count += 1
            continue
        if o < j:
            stack.append((o + 1, c))
        if c < o:
            stack.append((o, c + 1))
    return count


def compositions(n: int, parts: int, min_part: int = 1) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of ``parts`` integers >= min_part summing to n."""
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        if n >= min_part:
            yield (n,)
        return
    for first in range(min_part, n - min_part * (parts - 1) + 1):
        for rest in compositions(n - first, parts - 1, min_part):
            yield (first,) + rest


def forest_identity_sides(n: int) -> tuple[int, int]:
    """(C_n, sum over m and compositions of n-1 into m parts of prod C_k)."""
    if n < 2:
        raise ValueError("forest identity needs n >= 2")
    rhs = 0
    for m in range(1, n):
        for comp in compositions(n - 1, m):
            rhs += math.prod(catalan(k, "shifted") for k in comp)
    return catalan(n, "shifted"), rhs


def forest_identity_check(n: int) -> bool:
    lhs, rhs = forest_identity_sides(n)
    return lhs == rhs


BINARY_CONVENTIONS = ("standard", "shifted_c0_1", "shifted_c0_0", "shifted_corrected")


@dataclass(frozen=True)
class BinaryIdentityResult:
    n: int
    convention: str
    lhs: int
    rhs: int
    holds: bool
    note: str


def binary_identity_check(n: int, convention: str = "standard") -> BinaryIdentityResult:
    """Quadratic Catalan recursion under one of several readings.

    ``standard``           Cat(n) = sum_{j1+j2=n-1} Cat(j1) Cat(j2)
    ``shifted_c0_1``       C_n = sum_{m=1}^{n-1} C_m C_{n-1-m} with C_0 := 1 (as printed)
    ``shifted_c0_0``       same sum with C_0 := 0
    ``shifted_corrected``  C_n = sum_{m=1}^{n-1} C_m C_{n-m}
    """
    if n < (1 if convention == "standard" else 2):
        raise ValueError("n out of range for this convention")
    if convention == "standard":
        lhs = catalan(n)
        rhs = sum(catalan(a) * catalan(n - 1 - a) for a in range(n))
        note = "standard indexing, Cat(0) = 1"
    elif convention in ("shifted_c0_1", "shifted_c0_0"):
        c0 = 1 if convention == "shifted_c0_1" else 0

        def c(k: int) -> int:
            return c0 if k == 0 else catalan(k, "shifted")

        lhs = catalan(n, "shifted")
        rhs = sum(c(m) * c(n - 1 - m) for m in range(1, n))
        note = f"shifted indexing as printed with C_0 := {c0}"
    elif convention == "shifted_corrected":
        lhs = catalan(n, "shifted")
        rhs = sum(catalan(m, "shifted") * catalan(n - m, "shifted") for m in range(1, n))
        note = "shifted indexing with second index n-m"
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return BinaryIdentityResult(n, convention, lhs, rhs, lhs == rhs, note)


def first_binary_failure(convention: str, n_max: int = 20) -> int | None:
    start = 1 if convention == "standard" else 2
    for n in range(start, n_max + 1):
        if not binary_identity_check(n, convention).holds:
            return n
    return None


VARIABLE_BRANCHING_MAX = 14


def variable_branching_sides(L: int, j0: int, convention: str = "shifted") -> tuple[int, int]:
    """Both sides of the branching bound with n = L + j0.

    LHS sums, over alpha >= 2 factors, the products of Catalan numbers of the
    parts of every composition of n-1 into alpha positive parts; RHS is the
    Catalan number of n.  Only the total L + j0 enters.
    """
    n = L + j0
    if n > VARIABLE_BRANCHING_MAX:
        raise ValueError(f"L + j0 = {n} exceeds enumeration cutoff {VARIABLE_BRANCHING_MAX}")
    if n < 0:
        raise ValueError("L + j0 must be nonnegative")
    lhs = 0
    for alpha in range(2, n):
        for comp in compositions(n - 1, alpha):
            lhs += math.prod(catalan(p, convention) for p in comp)
    if convention == "shifted" and n == 0:
        return lhs, 0
    return lhs, catalan(n, convention)


def variable_branching_bound_check(L: int, j0: int, convention: str = "shifted") -> bool:
    lhs, rhs = variable_branching_sides(L, j0, convention)
    return lhs <= rhs


def multinomial_split_sides(X: int, Y: int, Z: int, l_vec: Sequence[int]) -> tuple[int, int]:
    l_vec = tuple(int(v) for v in l_vec)
    if min((X, Y, Z) + l_vec, default=0) < 0:
        raise ValueError("all entries must be nonnegative")
    if sum(l_vec) != X + Y + Z:
        raise ValueError("sum of l_vec must equal X + Y + Z")
    if X + Y + Z > 12:
        raise ValueError("total exceeds enumeration cutoff 12")

    def rec(rows: tuple[int, ...], x: int, y: int, z: int) -> int:
        if not rows:
            return 1 if x == y == z == 0 else 0
        l, rest = rows[0], rows[1:]
        total = 0
        for xi in range(min(l, x) + 1):
            for yi in range(min(l - xi, y) + 1):
                zi = l - xi - yi
                if zi > z:
                    continue
                w = math.factorial(l) // (
                    math.factorial(xi) * math.factorial(yi) * math.factorial(zi)
                )
                total += w * rec(rest, x - xi, y - yi, z - zi)
        return total

    lhs = rec(l_vec, X, Y, Z)
    rhs = math.factorial(X + Y + Z) // (math.factorial(X) * math.factorial(Y) * math.factorial(Z))
    return lhs, rhs


def multinomial_split_check(X: int, Y: int, Z: int, l_vec: Sequence[int]) -> bool:
    lhs, rhs = multinomial_split_sides(X, Y, Z, l_vec)
    return lhs == rhs


def _ratio_factor(a: int, v: int) -> Fraction:
    return Fraction(math.factorial(a), math.factorial(2 * a - v))


def _min_part(v: int) -> int:
    return max(1, (v + 1) // 2)


def product_value(parts: Sequence[int], v: int) -> Fraction:
    return math.prod((_ratio_factor(a, v) for a in parts), start=Fraction(1))


def balanced_closed_form(i: int, k: int, v: int) -> Fraction:
    q, r = divmod(i, k)
    return _ratio_factor(q, v) ** (k - r) * _ratio_factor(q + 1, v) ** r


@dataclass(frozen=True)
class BalancedResult:
    i: int
    k: int
    v: int
    max_value: Fraction
    argmax: tuple[int, ...]
    closed_form: Fraction
    passed: bool


def balanced_maximizer(i: int, k: int, v: int) -> BalancedResult:
    if v not in (0, 1, 2):
        raise ValueError("v must be 0, 1 or 2")
    lo = _min_part(v)
    best, arg = None, None
    for comp in compositions(i, k, lo):
        val = product_value(comp, v)
        if best is None or val > best:
            best, arg = val, comp
    if best is None:
        raise ValueError(f"no composition of {i} into {k} parts >= {lo}")
    closed = balanced_closed_form(i, k, v)
    balanced = max(arg) - min(arg) <= 1
    return BalancedResult(i, k, v, best, arg, closed, balanced and best == closed)


def balanced_maximizer_check(i: int, k: int, v: int) -> bool:
    return balanced_maximizer(i, k, v).passed


def prod_estimate_constant(i: int, k: int, v: int) -> float:
    """Smallest C with max over compositions of prod a!/(2a-v)! <= C^i k^i / i!."""
    best = balanced_maximizer(i, k, v).max_value
    ratio = best * math.factorial(i) / Fraction(k) ** i
    return math.exp((math.log(ratio.numerator) - math.log(ratio.denominator)) / i)


def prod_estimate_check(i: int, k: int, v: int) -> float:
    c = prod_estimate_constant(i, k, v)
    if not math.isfinite(c):
        raise ArithmeticError("non-finite product constant")
    return c


def robbins_margins(n: int, dps: int = 50) -> tuple[float, float]:
    """(ln n! - lower, upper - ln n!) in log form; both must be > 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    with mpmath.workdps(dps):
        log_fact = mpmath.fsum(mpmath.log(k) for k in range(1, n + 1))
        base = mpmath.log(mpmath.sqrt(2 * mpmath.pi * n)) + n * (mpmath.log(n) - 1)
        lower = base + mpmath.mpf(1) / (12 * n + 1)
        upper = base + mpmath.mpf(1) / (12 * n)
        return float(log_fact - lower), float(upper - log_fact)


def robbins_check(n_max: int) -> bool:
    return all(min(robbins_margins(n)) > 0 for n in range(1, n_max + 1))


@lru_cache(maxsize=None)
def catalan_table(n: int, convention: str = "standard") -> tuple[int, ...]:
    start = 0 if convention == "standard" else 1
    return tuple(catalan(j, convention) for j in range(start, n + 1))


def all_multinomial_cases(max_xyz: int = 4, max_rows: int = 4) -> Iterator[tuple[int, int, int, tuple[int, ...]]]:
    """Every (X, Y, Z, l_vec) with X, Y, Z <= max_xyz and up to max_rows rows."""
    for X, Y, Z in product(range(max_xyz + 1), repeat=3):
        total = X + Y + Z
        for rows in range(1, max_rows + 1):
            for comp in compositions(total, rows, 0):
                yield X, Y, Z, comp
