import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from psoid import robots
from psoid.pso import PsoConfig, SearchBox
from psoid.trajectory import (
    FAITHFUL_PENALTY,
    STABLE_PENALTY,
    FourierTrajectory,
    JointConstraints,
    PlanningError,
    build_qsam,
    check_constraints,
    check_times,
    default_planning_box,
    eval_trajectory,
    excitation_objective,
    gram_det,
    gram_logdet,
    plan_trajectory,
)

from _oracles import brute_det3

WIDE = dict(qd=(-100.0, 100.0), qdd=(-1000.0, 1000.0))


def _traj(offset, amp, omega, T=10.0):
    return FourierTrajectory(offset=offset, amplitude=amp, omega=omega, T=T)


def _small_random(rng, n=3, start=0.5, scale=0.1):
    return _traj(np.full(n, start), rng.uniform(-scale, scale, (n, 3)), rng.uniform(-1.0, 1.0, (n, 3)))


# -- evaluation ---------------------------------------------------------


def test_zero_amplitude_is_constant():
    tr = _traj([0.1, -0.4], np.zeros((2, 3)), np.ones((2, 3)))
    for t in (0.0, 3.3, 10.0):
        q, qd, qdd = eval_trajectory(tr, t)
        assert np.array_equal(q, [0.1, -0.4])
        assert np.array_equal(qd, [0.0, 0.0]) and np.array_equal(qdd, [0.0, 0.0])


def test_excitation_trajectory_starts_at_its_offset():
    q, _, _ = eval_trajectory(robots.experiment_trajectory(), 0.0)
    assert q[0] == -2.63


def test_initial_velocity_is_amplitude_times_frequency(rng):
    tr = _traj(rng.normal(size=3), rng.normal(size=(3, 3)), rng.normal(size=(3, 3)))
    _, qd, _ = eval_trajectory(tr, 0.0)
    np.testing.assert_allclose(qd, np.sum(tr.amplitude * tr.omega, axis=1), rtol=1e-15)


def test_derivatives_match_finite_differences(rng):
    tr = _traj(rng.normal(size=2), rng.normal(size=(2, 3)), rng.uniform(-2, 2, (2, 3)))
    t = np.linspace(1, 9, 17)
    h = 1e-5
    q_p, qd_p, _ = tr.states(t + h)
    q_m, qd_m, _ = tr.states(t - h)
    _, qd, qdd = tr.states(t)
    np.testing.assert_allclose((q_p - q_m) / (2 * h), qd, atol=1e-8)
    np.testing.assert_allclose((qd_p - qd_m) / (2 * h), qdd, atol=1e-8)


@pytest.mark.parametrize("t", [-1e-9, 10.000001, np.nan])
def test_eval_outside_horizon_rejected(t):
    with pytest.raises(ValueError):
        eval_trajectory(robots.experiment_trajectory(), t)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        _traj([0.0], np.zeros((1, 3)), np.zeros((1, 3)), T=0.0)
    with pytest.raises(ValueError):
        _traj([0.0], [[np.inf, 0, 0]], np.zeros((1, 3)))


def test_sinusoid_vector_order_and_roundtrip(rng):
    tr = _traj(rng.normal(size=3), rng.normal(size=(3, 3)), rng.normal(size=(3, 3)))
    x = tr.sinusoid_vector()
    assert x.shape == (18,)
    assert x[:6].tolist() == [tr.amplitude[0, 0], tr.omega[0, 0], tr.amplitude[0, 1], tr.omega[0, 1], tr.amplitude[0, 2], tr.omega[0, 2]]
    back = FourierTrajectory.from_sinusoid_vector(x, tr.offset, tr.T)
    assert np.array_equal(back.amplitude, tr.amplitude) and np.array_equal(back.omega, tr.omega)


def test_dict_roundtrip_through_yaml():
    tr = robots.verification_trajectory()
    back = FourierTrajectory.from_dict(yaml.safe_load(yaml.safe_dump(tr.to_dict())))
    assert np.array_equal(back.amplitude, tr.amplitude)
    assert np.array_equal(back.omega, tr.omega)
    assert np.array_equal(back.offset, tr.offset) and back.T == tr.T


def test_from_dict_rejects_wrong_term_count():
    with pytest.raises(ValueError):
        FourierTrajectory.from_dict({"T": 10, "joints": [{"offset": 0, "terms": [[1, 1], [1, 1]]}]})


def test_write_csv(tmp_path):
    tr = robots.verification_trajectory()
    path = tmp_path / "traj.csv"
    tr.write_csv(path, N=50)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == ["t", "q1", "q2", "q3", "qd1", "qd2", "qd3", "qdd1", "qdd2", "qdd3"]
    assert len(lines) == 52
    assert float(lines[1].split(",")[0]) == 0.0 and float(lines[-1].split(",")[0]) == 10.0


# -- sample matrix ------------------------------------------------------


def test_single_sample_matrix():
    tr = _traj([0.3], [[0.1, 0.2, 0.3]], [[0.5, 1.0, 1.5]])
    Q = build_qsam(tr, 1)
    assert Q.shape == (1, 3)
    np.testing.assert_array_equal(Q[0], np.concatenate(eval_trajectory(tr, 10.0)))


def test_sample_matrix_layout():
    tr = robots.reference_planned_trajectory()
    Q = build_qsam(tr, 100)
    assert Q.shape == (100, 9)
    q, qd, qdd = eval_trajectory(tr, 10.0 / 100 * 37)
    np.testing.assert_array_equal(Q[36], np.column_stack([q, qd, qdd]).ravel())


def test_zero_amplitude_gram_is_singular():
    Q = build_qsam(_traj([0.5, 0.5, 0.5], np.zeros((3, 3)), np.ones((3, 3))), 50)
    assert gram_det(Q) == 0.0
    assert gram_logdet(Q) == -np.inf


def test_brute_force_determinant_oracle():
    Q = np.array([[0.3, 1.2, -0.7], [0.9, -0.4, 0.5], [-1.1, 0.8, 0.6]])
    expected = brute_det3(Q.T @ Q)
    assert gram_det(Q) == pytest.approx(expected, rel=1e-12)
    assert np.exp(gram_logdet(Q)) == pytest.approx(expected, rel=1e-12)


def test_brute_force_oracle_through_a_trajectory():
    tr = _traj([0.2], [[0.3, -0.2, 0.1]], [[0.7, 1.3, -2.1]], T=3.0)
    Q = build_qsam(tr, 3)
    rows = [np.concatenate(eval_trajectory(tr, t)) for t in (1.0, 2.0, 3.0)]
    expected = brute_det3(np.array(rows).T @ np.array(rows))
    cons = JointConstraints.uniform(1, (-10, 10), (-10, 10), (-10, 10))
    assert excitation_objective(tr, cons, N=3, mode="faithful") == pytest.approx(expected, rel=1e-10)
    assert np.array_equal(Q, np.array(rows))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(9, 60))
def test_gram_determinant_nonnegative(seed, N):
    rng = np.random.default_rng(seed)
    Q = build_qsam(_small_random(rng), N)
    assert gram_det(Q) >= 0.0


# -- constraints --------------------------------------------------------


def test_constraints_validation():
    with pytest.raises(ValueError):
        JointConstraints.uniform(2, (1.0, 0.0), (-1, 1), (-1, 1))
    with pytest.raises(ValueError):
        JointConstraints.uniform(2, (0.0, 1.0), (-1, 1), (-1, 1), margin=1.0)
    with pytest.raises(ValueError):
        JointConstraints([0], [1], [0, 0], [1, 1], [0], [1])


def test_margin_shrinks_toward_center():
    eff = JointConstraints.uniform(1, (0.0, 1.0), (-2.0, 2.0), (-1.0, 3.0), margin=0.1).effective()
    np.testing.assert_allclose(eff[:, :, 0], [[0.05, 0.95], [-1.8, 1.8], [-0.8, 2.8]])


def test_check_grid_contains_samples_and_endpoints():
    t = check_times(10.0, 7, 70)
    assert t[0] == 0.0 and t[-1] == 10.0
    assert np.all(np.isin(10.0 / 7 * np.arange(1, 8), t))
    with pytest.raises(ValueError):
        check_times(10.0, 100, 50)


def test_constant_feasible_trajectory():
    cons = robots.simplified_constraints()
    chk = check_constraints(_traj([0.5] * 3, np.zeros((3, 3)), np.ones((3, 3))), cons, 1000)
    assert chk.a == 0 and chk.feasible and chk.violations == []


def test_large_amplitude_violates_position():
    cons = JointConstraints.uniform(1, (0.0, 1.0), **WIDE)
    chk = check_constraints(_traj([0.5], [[0.4, 0.3, 0.0]], [[1.0, 0.5, 1.0]]), cons, 1000)
    assert chk.a == 1
    assert any(v.order == "q" and v.joint == 1 for v in chk.violations)
    assert chk.worst(1)[0].excess > 0


def test_dense_grid_catches_violation_between_samples():
    # sin(pi t) vanishes at every sample time t = 1..10
    tr = _traj([0.5], [[0.6, 0.0, 0.0]], [[np.pi, 0.0, 0.0]])
    cons = JointConstraints.uniform(1, (0.0, 1.0), **WIDE)
    assert check_constraints(tr, cons, grid=10, N=10).a == 0
    assert check_constraints(tr, cons, grid=100, N=10).a == 1


def test_published_excitation_trajectory_breaks_its_limits():
    chk = check_constraints(robots.experiment_trajectory(), robots.experiment_constraints(), 1000, 100)
    assert chk.a == 1
    worst = chk.worst(1)[0]
    assert worst.joint == 1 and worst.order == "q" and worst.value < -np.pi


def test_published_verification_trajectory_breaks_its_limits():
    assert check_constraints(robots.verification_trajectory(), robots.experiment_constraints(), 1000, 100).a == 1


def test_published_random_trajectories_are_feasible():
    cons = robots.simplified_constraints()
    for tr in (robots.random_trajectory_1(), robots.random_trajectory_2()):
        assert check_constraints(tr, cons, 1000, 100).feasible


def test_published_planned_column_exceeds_acceleration_limit():
    chk = check_constraints(robots.reference_planned_trajectory(), robots.simplified_constraints(), 1000, 100)
    assert chk.a == 1
    worst = chk.worst(1)[0]
    assert (worst.joint, worst.order) == (3, "qdd") and worst.value > 1.3


# -- objective ----------------------------------------------------------


def test_too_few_samples_give_zero_faithful_score(rng):
    cons = robots.simplified_constraints()
    tr = robots.random_trajectory_1()
    assert excitation_objective(tr, cons, N=8, grid=80, mode="faithful") == 0.0
    assert excitation_objective(tr, cons, N=8, grid=80, mode="stable") == 0.0


@pytest.mark.parametrize("mode, penalty", [("faithful", FAITHFUL_PENALTY), ("stable", STABLE_PENALTY)])
def test_infeasible_scores_negative(mode, penalty):
    cons = robots.simplified_constraints()
    tr = robots.reference_planned_trajectory()
    h = excitation_objective(tr, cons, mode=mode)
    assert h < 0
    assert h <= -penalty + 1e3


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        excitation_objective(robots.random_trajectory_1(), robots.simplified_constraints(), mode="exact")


def test_stable_is_log1p_of_faithful():
    cons = robots.simplified_constraints()
    tr = _traj([0.5] * 3, [[0.2, 0.1, 0.05]] * 3, [[0.4, 0.9, -0.7], [0.5, -0.3, 0.8], [0.6, 0.2, -0.9]])
    f = excitation_objective(tr, cons, mode="faithful")
    s = excitation_objective(tr, cons, mode="stable")
    assert f > 0
    assert s == pytest.approx(np.log1p(f), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_penalty_sign_matches_feasibility(seed):
    rng = np.random.default_rng(seed)
    cons = robots.simplified_constraints()
    tr = _small_random(rng, scale=0.4)
    a = check_constraints(tr, cons, 1000, 100).a
    for mode in ("faithful", "stable"):
        assert (excitation_objective(tr, cons, mode=mode) < 0) == (a == 1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.05, 1.0))
def test_scaling_amplitudes_scales_determinant(seed, lam):
    rng = np.random.default_rng(seed)
    tr = _traj(np.zeros(2), rng.uniform(-0.3, 0.3, (2, 3)), rng.uniform(-1.5, 1.5, (2, 3)))
    scaled = _traj(np.zeros(2), lam * tr.amplitude, tr.omega)
    d1 = gram_det(build_qsam(tr, 100))
    dl = gram_det(build_qsam(scaled, 100))
    assert dl <= d1 * (1 + 1e-9)
    assert gram_logdet(build_qsam(scaled, 100)) == pytest.approx(gram_logdet(build_qsam(tr, 100)) + 12 * np.log(lam), abs=1e-6)


# -- planning -----------------------------------------------------------


def test_planning_box_shape_and_bounds():
    box = default_planning_box(robots.experiment_constraints(), omega_max=2.0)
    assert box.dim == 18
    assert box.upper[0] == pytest.approx(np.pi) and box.upper[1] == 2.0 and box.lower[1] == -2.0
    box = default_planning_box(robots.experiment_constraints(), 1.5, [1.0, 0.4, 0.4])
    assert box.upper[6] == 0.4 and box.upper[7] == 1.5


@pytest.fixture(scope="module")
def planned():
    cons = robots.simplified_constraints()
    return cons, plan_trajectory(cons, [0.5, 0.5, 0.5], pso_config=PsoConfig(seed=1, iterations=60))


def test_planner_output_shape_and_start(planned):
    cons, tr = planned
    assert tr.sinusoid_vector().shape == (18,)
    assert np.array_equal(tr.offset, [0.5, 0.5, 0.5])
    q0, _, _ = eval_trajectory(tr, 0.0)
    assert np.array_equal(q0, [0.5, 0.5, 0.5])
    assert check_constraints(tr, cons, 1000, 100).feasible


def test_planner_beats_published_random_trajectories(planned):
    cons, tr = planned
    h = excitation_objective(tr, cons, mode="faithful")
    for other in (robots.random_trajectory_1(), robots.random_trajectory_2()):
        assert h >= excitation_objective(other, cons, mode="faithful")


def test_planner_is_deterministic(planned):
    cons, tr = planned
    again = plan_trajectory(cons, [0.5, 0.5, 0.5], pso_config=PsoConfig(seed=1, iterations=60), workers=3)
    assert np.array_equal(again.sinusoid_vector(), tr.sinusoid_vector())


def test_degenerate_bounds_give_near_constant_plan():
    cons = JointConstraints.uniform(3, (0.5 - 1e-4, 0.5 + 1e-4), (-1.0, 1.0), (-1.0, 1.0))
    tr = plan_trajectory(cons, [0.5] * 3, pso_config=PsoConfig(seed=2, iterations=20), mode="faithful")
    assert np.max(np.abs(tr.amplitude)) <= 1e-4
    assert excitation_objective(tr, cons, mode="faithful") == pytest.approx(0.0, abs=1e-30)


def test_unreachable_limits_raise_planning_error():
    cons = JointConstraints.uniform(3, (0.0, 1.0), (-1e-6, 1e-6), (-1e-6, 1e-6))
    with pytest.raises(PlanningError) as err:
        plan_trajectory(cons, [0.5] * 3, pso_config=PsoConfig(seed=0, iterations=5))
    assert err.value.violations


def test_planner_input_validation():
    cons = robots.simplified_constraints()
    with pytest.raises(ValueError):
        plan_trajectory(cons, [0.5, 0.5])
    with pytest.raises(ValueError):
        plan_trajectory(cons, [0.5, 1.5, 0.5])
    with pytest.raises(ValueError):
        plan_trajectory(cons, [0.5] * 3, box=SearchBox([0.0] * 6, [1.0] * 6))
