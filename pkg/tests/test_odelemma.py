import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatseries import odelemma as od

P = od.MZParams(1.0, 1.0, 1.0, 0.05)


def _decoupled(T=40.0, dt=1e-3, b2=1.0):
    t = np.linspace(0, T, int(round(T / dt)) + 1)
    return od.Trajectory(t, np.zeros_like(t), np.ones_like(t), np.exp(-b2 * t))


def test_params_validation():
    with pytest.raises(ValueError):
        od.MZParams(0.0, 1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        od.MZParams(1.0, 0.5, 1.0, 0.1)
    assert od.MZParams(2.0, 2.0, 4.0, 0.2).rescaled() == od.MZParams(1.0, 1.0, 2.0, 0.1)


def test_trajectory_validation():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        od.Trajectory(t, -np.ones_like(t), np.ones_like(t), np.ones_like(t))
    with pytest.raises(ValueError):
        od.Trajectory(t, np.zeros_like(t), np.zeros_like(t), np.zeros_like(t))
    with pytest.raises(ValueError):
        od.Trajectory(t, np.zeros(3), np.ones_like(t), np.ones_like(t))


def test_decoupled_system_lands_in_branch_a():
    params = od.MZParams(1.0, 1.0, 1.0, 0.0)
    v = od.verify_conclusions(_decoupled(), params)
    assert v.hyp_ok and v.plus_bound_ok
    assert v.branch == "A" and v.valid
    # the tolerance is relative, so s0 is where e^{-t} drops to about 1e-6
    assert 12 < v.s0 < 16


def test_constructed_violation_is_located():
    traj = _decoupled()
    traj.x_plus[5000] = 0.5  # a spike: x+ drops sharply right after node 5000
    rep = od.verify_hypotheses(traj, od.MZParams(1.0, 1.0, 1.0, 0.0))
    assert not rep.passed
    assert rep.first_failure["plus"] in (5000, 5001)
    assert rep.failing_node() in (4999, 5000, 5001)


def test_liminf_condition():
    traj = _decoupled()
    traj.x_plus[:] = np.exp(traj.t - traj.T)  # growing x+ never vanishes
    rep = od.verify_hypotheses(traj, od.MZParams(1.0, 1.0, 1.0, 0.0))
    assert not rep.liminf_ok


def test_coarse_grid_refused():
    with pytest.raises(od.GridTooCoarse):
        od.verify_hypotheses(_decoupled(dt=0.5), P)


def test_csv_round_trip(tmp_path):
    traj = od.generate_random_system(3, P, T=5.0)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    back = od.Trajectory.from_csv(path)
    for name in ("t", "x_plus", "x_zero", "x_minus"):
        assert np.array_equal(getattr(back, name), getattr(traj, name))


def test_modal_solution_matches_stepping():
    M = od.system_matrix(P, (0.3, 0.6, 0.9), -1)
    dt, n = 1e-2, 400
    X = od.solve_modal(M, dt, n, [(n, 0, 0.0), (0, 1, 0.7), (0, 2, 0.4)])
    R = np.eye(3)
    Z = dt * M
    step = R + Z + Z @ Z / 2 + Z @ Z @ Z / 6 + Z @ Z @ Z @ Z / 24
    for k in (0, 100, 399):
        assert np.allclose(step @ X[k], X[k + 1], rtol=1e-9, atol=1e-12)
    assert abs(X[n, 0]) < 1e-12 and X[0, 1] == pytest.approx(0.7)


@pytest.mark.parametrize("mode", ["neutral", "stable"])
def test_generated_systems_meet_hypotheses(mode):
    for seed in range(5):
        traj = od.generate_random_system(od.seeded_rng(11, seed), P, T=20.0, mode=mode)
        assert traj.meta["mode"] == mode
        assert od.verify_hypotheses(traj, P).passed


def test_generator_guards_ratio():
    with pytest.raises(ValueError):
        od.generate_random_system(0, od.MZParams(1.0, 1.0, 1.0, 0.5))
    with pytest.raises(ValueError):
        od.generate_random_system(0, P, mode="wild")


def test_generation_is_deterministic():
    a = od.generate_random_system(od.seeded_rng(5, 2), P, T=10.0)
    b = od.generate_random_system(od.seeded_rng(5, 2), P, T=10.0)
    assert np.array_equal(a.x_zero, b.x_zero) and a.meta == b.meta


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_verdict_stable_under_grid_refinement(seed):
    coarse = od.generate_random_system(od.seeded_rng(seed, 0), P, T=20.0, dt=1e-3)
    fine = od.generate_random_system(od.seeded_rng(seed, 0), P, T=20.0, dt=5e-4)
    vc, vf = od.verify_conclusions(coarse, P), od.verify_conclusions(fine, P)
    assert vc.valid and vf.valid
    assert vc.branch == vf.branch


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 4.0]))
def test_verdict_invariant_under_time_rescaling(seed, b):
    params = od.MZParams(b, b, 1.5 * b, 0.05 * b)
    T = 40.0 / b
    traj = od.generate_random_system(od.seeded_rng(seed, 1), params, T=T, dt=T / 40000)
    v = od.verify_conclusions(traj, params)
    w = od.verify_conclusions(od.rescale_trajectory(traj, b), params.rescaled())
    assert v.branch == w.branch and v.valid == w.valid


def test_small_suite_passes():
    res = od.run_suite(0, 20, P, T=20.0)
    assert res.passed
    assert set(res.branches) <= {"A", "B"}
    assert len(res.verdicts) == 20


def test_threshold_probe_rows():
    rows = od.epsilon_threshold_probe([0.05, 0.2], 5, T=10.0)
    assert [r["eps_over_b"] for r in rows] == [0.05, 0.2]
    assert all(0 <= r["failure_rate"] <= 1 and "regenerated" in r for r in rows)
