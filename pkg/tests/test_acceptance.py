"""The twelve acceptance criteria at their stated tolerances.

The whole suite runs once per session; each criterion is then its own test,
and one PASS/FAIL line per criterion is printed in the terminal summary.
Set FLATSERIES_SEED to change the master seed (default 0).
"""

import os

import pytest

from flatseries.acceptance import run_all

N_CRITERIA = 12


@pytest.fixture(scope="module")
def results(tmp_path_factory, request):
    seed = int(os.environ.get("FLATSERIES_SEED", "0"))
    checks = run_all(tmp_path_factory.mktemp("acceptance"), seed)
    assert len(checks) == N_CRITERIA
    lines = [c.line() for c in checks]
    request.config.stash[ACCEPTANCE_LINES] = lines
    for line in lines:
        print(line)
    return {int(c.name.split()[0]): c for c in checks}


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.mark.slow
@pytest.mark.parametrize("criterion", range(1, N_CRITERIA + 1))
def test_criterion(results, criterion):
    check = results[criterion]
    assert check.passed, check.line()
