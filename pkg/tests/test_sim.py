import math

import pytest

import pwsfold as pf
from pwsfold.sim import (IntegratorOptions, compare_trajectories,
                         integrate_smooth, regularized_trajectory,
                         run_example, section6_system, trajectory_csv)


def decay_field(t, x):
    return (-x[0], -x[1], -x[2])


class TestIntegrateSmooth:
    def test_linear_decay(self):
        traj = integrate_smooth(decay_field, (1.0, 1.0, 1.0), 1.0)
        e = math.exp(-1.0)
        for v in traj.final_state:
            assert abs(v - e) < 1e-7

    def test_global_error_budget(self):
        traj = integrate_smooth(decay_field, (1.0, 1.0, 1.0), 1.0)
        e = math.exp(-1.0)
        err = max(abs(v - e) for v in traj.final_state)
        assert err < 1e-6

    def test_dense_output_stride(self):
        opts = IntegratorOptions(dense_output_stride=0.25)
        traj = integrate_smooth(decay_field, (1.0, 1.0, 1.0), 1.0, opts)
        assert traj.times == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
        assert traj.state_at(0.5)[0] == pytest.approx(math.exp(-0.5), abs=1e-7)

    def test_step_budget_error(self):
        opts = IntegratorOptions(max_steps=3)
        with pytest.raises(pf.StepBudgetError):
            integrate_smooth(decay_field, (1.0, 1.0, 1.0), 10.0, opts)

    def test_rejects_bad_options(self):
        with pytest.raises(ValueError):
            IntegratorOptions(rel_tol=0.0)
        with pytest.raises(ValueError):
            IntegratorOptions(max_steps=0)

    def test_tolerance_monotonicity(self):
        # halving rel_tol never increases the deviation from a tight reference
        field = lambda t, x: (x[1], -x[0], 0.25 * x[0] * x[1])
        ref = integrate_smooth(field, (1.0, 0.0, 0.1), 10.0,
                               IntegratorOptions(rel_tol=1e-12, abs_tol=1e-13))
        grid = [10.0 * i / 100 for i in range(101)]
        prev = None
        for rtol in (1e-4, 5e-5, 2.5e-5, 1.25e-5):
            traj = integrate_smooth(field, (1.0, 0.0, 0.1), 10.0,
                                    IntegratorOptions(rel_tol=rtol, abs_tol=1e-12))
            dev = compare_trajectories(traj, ref, grid)
            if prev is not None:
                assert dev <= prev * (1 + 1e-9)
            prev = dev


class TestSection6:
    @pytest.mark.parametrize("nonlinear,slope", [(False, -1.0), (True, 1.0)])
    def test_layer_drift_slopes(self, nonlinear, slope):
        sys = section6_system(nonlinear)
        s = pf.builtin_sigmoid("tanh")
        eps = 1e-3
        traj = regularized_trajectory(sys, s, eps, (0.5, 0.0, 0.0), 3.0)
        entry = next(t for t, x in zip(traj.times, traj.states)
                     if abs(x[0]) <= eps)
        t1 = entry + 0.5
        got = (traj.state_at(3.0)[1] - traj.state_at(t1)[1]) / (3.0 - t1)
        assert got == pytest.approx(slope, rel=0.01)

    def test_slope_difference_two_percent(self):
        s = pf.builtin_sigmoid("tanh")
        eps = 1e-3
        slopes = []
        for nonlinear in (False, True):
            traj = regularized_trajectory(section6_system(nonlinear), s, eps,
                                          (0.5, 0.0, 0.0), 3.0)
            slopes.append((traj.state_at(3.0)[1] - traj.state_at(1.0)[1]) / 2.0)
        assert slopes[1] - slopes[0] == pytest.approx(2.0, rel=0.02)

    def test_off_surface_dynamics_identical(self):
        lin = section6_system(False)
        non = section6_system(True)
        for lam in (1.0, -1.0):
            for x in ((0.5, 0.2, 0.0), (-0.3, -1.0, 0.0)):
                assert pf.combination(lin, x, lam) == pf.combination(non, x, lam)


class TestRunExample:
    def test_short_run_bounded(self):
        traj = run_example("ii", 1e-3, 10.0, "tanh")
        assert traj.sup_norm() < 5.0
        assert traj.times[-1] == pytest.approx(10.0)

    def test_unknown_example(self):
        with pytest.raises(pf.ValidationError):
            run_example("iv", 1e-3, 1.0)

    def test_rejects_nonpositive_eps(self):
        with pytest.raises(ValueError):
            run_example("i", 0.0, 1.0)

    def test_layer_lambda_recorded(self):
        traj = run_example("ii", 1e-3, 10.0, "tanh")
        in_layer = [lam for x, lam in zip(traj.states, traj.lambdas)
                    if abs(x[0]) <= 1e-3]
        assert in_layer
        assert all(lam is not None and abs(lam) <= 1.0 for lam in in_layer)

    def test_fine_scale_flag_path(self):
        # the full-scale settings (eps down to 1e-5) stay usable; short
        # horizon keeps this cheap
        traj = run_example("ii", 1e-5, 1.0, "tanh")
        assert traj.times[-1] == pytest.approx(1.0)
        assert traj.sup_norm() < 5.0


class TestCompareTrajectories:
    def test_identical_zero(self):
        traj = integrate_smooth(decay_field, (1.0, 1.0, 1.0), 1.0)
        grid = [i / 50 for i in range(51)]
        assert compare_trajectories(traj, traj, grid) == 0.0

    def test_grid_outside_range(self):
        a = integrate_smooth(decay_field, (1.0, 1.0, 1.0), 1.0)
        b = integrate_smooth(decay_field, (1.0, 1.0, 1.0), 0.5)
        with pytest.raises(ValueError):
            compare_trajectories(a, b, [0.75])


class TestTrajectoryCsv:
    def test_header_and_lambda_column(self):
        sys = section6_system(True)
        traj = pf.integrate_pws(sys, (0.5, 0.0, 0.0), 1.0)
        text = trajectory_csv(traj)
        lines = text.strip().split("\n")
        assert lines[0] == "t,x1,x2,x3,lambda,mode"
        free = [l for l in lines[1:] if l.endswith("free+")]
        sliding = [l for l in lines[1:] if l.endswith("sliding")]
        assert free and sliding
        assert all(l.split(",")[4] == "" for l in free)
        assert all(l.split(",")[4] != "" for l in sliding)

    def test_seventeen_significant_digits(self):
        sys = section6_system(False)
        traj = pf.integrate_pws(sys, (1.0 / 3.0, 0.0, 0.0), 0.1)
        row = trajectory_csv(traj).strip().split("\n")[1]
        assert row.split(",")[1] == f"{1.0/3.0:.17g}"
