import math

import pytest
from hypothesis import given, strategies as st

from flatseries import combinat as cb


@pytest.mark.parametrize("j", range(12))
def test_catalan_counts_dyck_words(j):
    assert cb.catalan(j) == cb.count_dyck_words(j)


def test_catalan_conventions():
    assert [cb.catalan(j) for j in range(6)] == [1, 1, 2, 5, 14, 42]
    assert [cb.catalan(n, "shifted") for n in range(1, 7)] == [1, 1, 2, 5, 14, 42]
    with pytest.raises(ValueError):
        cb.catalan(0, "shifted")
    with pytest.raises(ValueError):
        cb.catalan(3, "other")


@given(st.integers(0, 9), st.integers(1, 4), st.integers(1, 2))
def test_compositions_match_count(n, parts, lo):
    comps = list(cb.compositions(n, parts, lo))
    assert all(len(c) == parts and sum(c) == n and min(c) >= lo for c in comps)
    assert len(set(comps)) == len(comps)
    free = n - lo * parts
    expected = math.comb(free + parts - 1, parts - 1) if free >= 0 else 0
    assert len(comps) == expected


@pytest.mark.parametrize("n", range(2, 13))
def test_forest_identity(n):
    assert cb.forest_identity_check(n)


@pytest.mark.parametrize("n", range(1, 16))
def test_binary_identity_standard(n):
    assert cb.binary_identity_check(n, "standard").holds


def test_binary_identity_readings():
    assert cb.first_binary_failure("standard") is None
    assert cb.first_binary_failure("shifted_corrected") is None
    # second index n-1-m only survives the first cases, and only with C_0 = 1
    assert cb.first_binary_failure("shifted_c0_1") == 4
    assert cb.first_binary_failure("shifted_c0_0") == 2


@pytest.mark.parametrize("L,j0", [(0, 2), (1, 3), (2, 4), (4, 4)])
def test_variable_branching_shifted(L, j0):
    assert cb.variable_branching_bound_check(L, j0, "shifted")


def test_variable_branching_standard_breaks_at_nine():
    fails = [n for n in range(2, 13) if not cb.variable_branching_bound_check(n, 0, "standard")]
    assert fails and fails[0] == 9


def test_variable_branching_cutoff():
    with pytest.raises(ValueError):
        cb.variable_branching_sides(10, 10)


@pytest.mark.parametrize("X,Y,Z,l_vec", list(cb.all_multinomial_cases(3, 3)))
def test_multinomial_split(X, Y, Z, l_vec):
    assert cb.multinomial_split_check(X, Y, Z, l_vec)


def test_multinomial_split_validation():
    with pytest.raises(ValueError):
        cb.multinomial_split_sides(1, 1, 1, (1, 1))


@pytest.mark.parametrize("v", [0, 1, 2])
@pytest.mark.parametrize("i,k", [(6, 2), (9, 3), (10, 4), (12, 5)])
def test_balanced_maximizer(i, k, v):
    r = cb.balanced_maximizer(i, k, v)
    assert r.passed
    assert max(r.argmax) - min(r.argmax) <= 1


def test_prod_estimate_constant_bounded():
    cs = [cb.prod_estimate_check(i, k, v) for i in range(2, 11) for k in range(1, i + 1) for v in (0, 1, 2)
          if i >= k * max(1, (v + 1) // 2)]
    assert max(cs) <= math.sqrt(2) + 1e-12


@pytest.mark.parametrize("n", [1, 2, 10, 100, 1000])
def test_robbins_margins_positive(n):
    lo, hi = cb.robbins_margins(n)
    assert lo > 0 and hi > 0
