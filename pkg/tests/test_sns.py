import numpy as np
import pytest

from conftest import random_instance
from gensns.constraints import GeneralizedBounds
from gensns.oracles import joint_limits_sns, max_scaling_oracle, qp_min_norm
from gensns.sns import (
    SolverError,
    TaskSpec,
    check_feasibility,
    get_task_scaling_factor,
    numerical_rank,
    pseudoinverse,
    sns_velocity,
)


def box(*pairs):
    lo, hi = zip(*pairs)
    return GeneralizedBounds(np.array(lo, float), np.array(hi, float))


class TestPseudoinverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudoinverse(np.eye(4)), np.eye(4), atol=1e-15)

    def test_zero_matrix(self):
        out = pseudoinverse(np.zeros((2, 3)))
        assert out.shape == (3, 2)
        np.testing.assert_array_equal(out, 0.0)

    def test_penrose_conditions(self, rng):
        for _ in range(20):
            M = rng.normal(size=(3, 5))
            X = pseudoinverse(M)
            assert np.max(np.abs(M @ X @ M - M)) <= 1e-10
            assert np.max(np.abs(X @ M @ X - X)) <= 1e-10
            assert np.max(np.abs((M @ X).T - M @ X)) <= 1e-10
            assert np.max(np.abs((X @ M).T - X @ M)) <= 1e-10

    def test_rank_deficient(self):
        M = np.array([[1.0, 2.0], [2.0, 4.0]])
        X = pseudoinverse(M)
        np.testing.assert_allclose(M @ X @ M, M, atol=1e-12)
        assert numerical_rank(M) == 1

    def test_noise_floor(self):
        assert numerical_rank(np.full((2, 3), 1e-16), atol=1e-10) == 0
        np.testing.assert_array_equal(pseudoinverse(np.full((2, 3), 1e-16), atol=1e-10), 0.0)


class TestScalingFactor:
    def test_binding_upper(self):
        out = get_task_scaling_factor([2.0], [0.0], box((-1, 1)))
        assert out.s[0] == 0.5 and out.task_scale == 0.5 and out.critical_row == 0

    def test_not_binding(self):
        assert get_task_scaling_factor([0.5], [0.0], box((-1, 1))).s[0] == 1.0

    def test_null_space_part_already_past_bound(self):
        assert get_task_scaling_factor([1.0], [2.0], box((-1, 1))).s[0] == 0.0

    def test_binding_lower(self):
        assert get_task_scaling_factor([-4.0], [0.0], box((-1, 1))).s[0] == 0.25

    def test_min_and_tie_break(self):
        out = get_task_scaling_factor([2.0, 4.0, 2.0], [0.0, 1.0, 0.0], box((-1, 1), (-1, 3), (-1, 1)))
        np.testing.assert_array_equal(out.s, [0.5, 0.5, 0.5])
        assert out.critical_row == 0

    def test_rows_the_task_cannot_move(self):
        out = get_task_scaling_factor([0.0, 0.0, 1.0], [0.5, 2.0, 0.0], box((-1, 1), (-1, 1), (-1, 1)))
        np.testing.assert_array_equal(out.s, [1.0, 0.0, 1.0])

    def test_saturated_rows_excluded(self):
        out = get_task_scaling_factor([1e-17, 2.0], [1.0, 0.0], box((-1, 1), (-1, 1)), saturated=[0])
        assert out.s[0] == 1.0 and out.critical_row == 1


class TestFeasibilityCheck:
    def test_zero_velocity_interior(self):
        assert check_feasibility(np.zeros(3), np.eye(3), box((-1, 1), (-1, 1), (-1, 1))) == []

    def test_single_violation_margin(self):
        viol = check_feasibility([0.0, 1.1], np.eye(2), box((-1, 1), (-1, 1)))
        assert len(viol) == 1 and viol[0].row == 1 and viol[0].side == "max"
        assert viol[0].margin == pytest.approx(0.1)

    def test_exact_boundary_not_flagged(self):
        assert check_feasibility([1.0, -0.5], np.eye(2), box((-1, 1), (-0.5, 1)), eps=1e-9) == []


class TestSolver:
    def test_unconstrained_feasible_is_min_norm_bit_for_bit(self):
        J = np.array([[1.0, 2.0, 0.5]])
        xdot = np.array([0.3])
        res = sns_velocity(TaskSpec(xdot, J), np.eye(3), box((-1, 1), (-1, 1), (-1, 1)))
        np.testing.assert_array_equal(res.qdot, pseudoinverse(J) @ xdot)
        assert res.scale == 1.0 and not res.scaled and res.saturated == [] and res.iterations == 1

    def test_saturates_and_still_achieves_task(self):
        # min-norm solution (0.5, 0.5) breaks q1 <= 0.2; saturating q1 moves the rest to q2
        J = np.array([[1.0, 1.0, 0.0]])
        res = sns_velocity(TaskSpec([1.0], J), np.eye(3), box((-1, 0.2), (-1, 1), (-1, 1)))
        np.testing.assert_allclose(res.qdot, [0.2, 0.8, 0.0], atol=1e-12)
        assert res.saturated == [(0, "max")] and not res.scaled

    def test_infeasible_task_is_scaled(self):
        # best possible is qdot = (1, 1): J qdot = 2, demanded 4
        J = np.array([[1.0, 1.0, 0.0]])
        task = TaskSpec([4.0], J)
        bounds = box((-1, 1), (-1, 1), (-1, 1))
        res = sns_velocity(task, np.eye(3), bounds)
        assert res.scaled and 0 < res.scale < 1
        assert res.scale == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(J @ res.qdot, res.scale * task.xdot, atol=1e-9)
        assert res.scale <= max_scaling_oracle(task, np.eye(3), bounds) + 1e-6

    def test_cartesian_row_limits_motion(self):
        # second row is a "control point" moving with q1 + q2; capped at 0.3
        A = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0]], dtype=float)
        J = np.array([[1.0, 1.0, 1.0]])
        bounds = box((-1, 1), (-1, 1), (-1, 1), (-0.3, 0.3))
        res = sns_velocity(TaskSpec([1.2], J), A, bounds)
        assert check_feasibility(res.qdot, A, bounds) == []
        np.testing.assert_allclose(J @ res.qdot, [1.2], atol=1e-12)
        np.testing.assert_allclose(res.qdot, [0.15, 0.15, 0.9], atol=1e-12)
        assert (3, "max") in res.saturated

    def test_non_finite_input(self):
        with pytest.raises(SolverError):
            TaskSpec([np.nan], [[1.0, 0.0]])
        with pytest.raises(SolverError):
            sns_velocity(TaskSpec([1.0], [[1.0, 0.0]]), np.eye(2), box((-1, np.inf), (-1, 1)))

    def test_requires_redundancy(self):
        with pytest.raises(ValueError):
            TaskSpec([1.0, 1.0], np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sns_velocity(TaskSpec([1.0], [[1.0, 0.0]]), np.eye(3), box((-1, 1), (-1, 1), (-1, 1)))

    def test_zero_scale_fallback_returns_zero_motion(self):
        # every bound pinned at zero: only qdot = 0 is admissible
        bounds = GeneralizedBounds(np.zeros(3), np.zeros(3))
        res = sns_velocity(TaskSpec([1.0], [[1.0, 2.0, 3.0]]), np.eye(3), bounds)
        assert res.scaled and res.scale == 0.0
        np.testing.assert_array_equal(res.qdot, 0.0)

    def test_random_instances(self, rng):
        for _ in range(300):
            task, A, bounds = random_instance(rng)
            res = sns_velocity(task, A, bounds)
            assert check_feasibility(res.qdot, A, bounds, eps=1e-9) == []
            s = res.scale if res.scaled else 1.0
            assert np.max(np.abs(task.J @ res.qdot - s * task.xdot)) <= 1e-9
            assert 0.0 <= res.scale <= 1.0
            assert res.iterations <= A.shape[0]

    def test_feasible_random_instances_match_oracle(self, rng):
        # small demands: most instances are feasible without scaling
        checked = 0
        for _ in range(60):
            task, A, bounds = random_instance(rng, speed=(0.05, 0.6))
            res = sns_velocity(task, A, bounds)
            if res.scaled:
                continue
            checked += 1
            sol = qp_min_norm(task, A, bounds)
            assert sol.feasible
            assert sol.objective <= res.qdot @ res.qdot + 1e-9
        assert checked > 30

    def test_reduces_to_joint_only_sns(self, rng):
        for _ in range(100):
            task, A, bounds = random_instance(rng, n_cart=0)
            res = sns_velocity(task, A, bounds)
            qdot, scale, scaled, _ = joint_limits_sns(task.J, task.xdot, bounds.b_min, bounds.b_max)
            assert np.max(np.abs(qdot - res.qdot)) <= 1e-12
            assert scaled == res.scaled
            assert scale == pytest.approx(res.scale, abs=1e-12)

    def test_deterministic(self, rng):
        task, A, bounds = random_instance(rng, n=6, m=2, n_cart=2, speed=(3, 4))
        a = sns_velocity(task, A, bounds)
        b = sns_velocity(task, A, bounds)
        np.testing.assert_array_equal(a.qdot, b.qdot)
        assert a.saturated == b.saturated
