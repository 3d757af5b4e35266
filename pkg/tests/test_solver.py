"""Measure-driven IVP solver: schemes, audits, horizon selection."""

import math

import numpy as np
import pytest

from stieltjes import (
    CaratheodoryBound,
    ConstantProfile,
    Derivator,
    DomainError,
    HorizonSelectionError,
    Jump,
    LinearProfile,
    RhsEvaluationError,
    Segment,
    SolveConfig,
    SystemSpec,
    select_horizon,
    solve,
    solve_euler,
    solve_picard,
    system_grid,
)

EULER_TOL = 1e-3
PICARD_TOL = 1e-5


def identity(a=0.0, b=1.0, jumps=()):
    return Derivator.identity(a, b, jumps=jumps)


def scalar_growth(jumps=()):
    """x' = x driven by the identity, x(0) = 1."""
    return SystemSpec(
        derivators=[identity(jumps=jumps)],
        rhs=lambda t, x: x,
        initial=[1.0],
    )


class TestSchemes:
    def test_euler_converges_to_the_exponential(self):
        spec = scalar_growth()
        grid = system_grid(spec.derivators, 1.0, 4096)
        left, right, warnings = solve_euler(spec, grid)
        assert abs(left[-1, 0] - math.e) < EULER_TOL
        assert warnings == []

    def test_picard_converges_to_the_exponential(self):
        spec = scalar_growth()
        grid = system_grid(spec.derivators, 1.0, 1024)
        left, right, converged, iterations, last_change, warnings = solve_picard(spec, grid)
        assert converged
        assert last_change < 1e-10
        assert abs(left[-1, 0] - math.e) < PICARD_TOL

    def test_jump_multiplies_by_the_exact_factor(self):
        # x' = x with a unit jump at 0.5: x(1) = 2 e
        spec = scalar_growth(jumps=[Jump(0.5, 1.0)])
        grid = system_grid(spec.derivators, 1.0, 2048)
        left, right, *_ = solve_picard(spec, grid)
        k = int(np.searchsorted(grid, 0.5))
        assert right[k, 0] == left[k, 0] + left[k, 0] * 1.0
        assert abs(left[-1, 0] - 2.0 * math.e) < PICARD_TOL

    def test_euler_error_halves_with_the_mesh(self):
        spec = scalar_growth()
        errs = []
        for mesh in (1024, 2048):
            grid = system_grid(spec.derivators, 1.0, mesh)
            left, *_ = solve_euler(spec, grid)
            errs.append(abs(left[-1, 0] - math.e))
        ratio = errs[1] / errs[0]
        assert 0.3 <= ratio <= 0.7

    def test_euler_safety_ball_warning(self):
        spec = scalar_growth()
        grid = system_grid(spec.derivators, 1.0, 256)
        _, _, warnings = solve_euler(spec, grid, safety_radius=0.1)
        assert len(warnings) == 1
        assert "safety ball" in warnings[0]

    def test_picard_reports_non_convergence_honestly(self):
        stiff = SystemSpec([identity()], lambda t, x: 50.0 * x, [1.0])
        grid = system_grid(stiff.derivators, 1.0, 64)
        *_, converged, iterations, last_change, warnings = solve_picard(
            stiff, grid, max_iter=3)
        assert not converged
        assert iterations == 3
        assert last_change > 1e-10
        assert any("stopped after 3 iterations" in w for w in warnings)


class TestSolveReport:
    def test_report_shape_and_final_state(self):
        spec = scalar_growth(jumps=[Jump(0.5, 1.0)])
        report = solve(spec, SolveConfig(mesh=512))
        assert report.method == "picard"
        assert report.converged
        assert report.grid[0] == 0.0 and report.grid[-1] == 1.0
        np.testing.assert_array_equal(
            report.final_state,
            [tr.right_values[-1] for tr in report.trajectories])
        assert report.error_estimate is not None
        assert report.error_estimate < PICARD_TOL

    def test_error_estimate_can_be_skipped(self):
        spec = scalar_growth()
        report = solve(spec, SolveConfig(mesh=128, error_estimate=False))
        assert report.error_estimate is None

    def test_horizon_truncates_the_grid(self):
        spec = SystemSpec([identity()], lambda t, x: x, [1.0], horizon=0.5)
        report = solve(spec, SolveConfig(mesh=256, error_estimate=False))
        assert report.grid[-1] == 0.5
        assert abs(report.final_state[0] - math.exp(0.5)) < PICARD_TOL

    def test_non_convergence_propagates_to_the_report(self):
        stiff = SystemSpec([identity()], lambda t, x: 50.0 * x, [1.0])
        report = solve(stiff, SolveConfig(mesh=64, max_iter=3, error_estimate=False))
        assert not report.converged
        assert any("stopped after" in w for w in report.warnings)


class TestJumpAudit:
    @pytest.mark.parametrize("picard", [True, False])
    def test_residual_is_exactly_zero(self, picard):
        spec = scalar_growth(jumps=[Jump(0.25, -0.4), Jump(0.5, 1.0)])
        report = solve(spec, SolveConfig(
            mesh=512, picard=picard, error_estimate=False))
        assert len(report.jump_audit) == 2
        for row in report.jump_audit:
            assert row.residual == 0.0
            assert row.residual_ulps == 0.0
            assert row.right == row.left + row.expected_increment

    def test_simultaneous_jumps_use_the_shared_pre_jump_state(self):
        d1 = identity(jumps=[Jump(0.5, 1.0)])
        d2 = identity(jumps=[Jump(0.5, 1.0)])
        spec = SystemSpec(
            [d1, d2],
            lambda t, x: np.array([x[1], -x[0]]),
            [1.0, 0.0],
        )
        report = solve(spec, SolveConfig(mesh=256, error_estimate=False))
        assert report.simultaneous_jumps == (0.5,)
        assert any("jump together" in w for w in report.warnings)
        k = int(np.searchsorted(report.grid, 0.5))
        x1 = report.trajectories[0].left_values[k]
        x2 = report.trajectories[1].left_values[k]
        assert report.trajectories[0].right_values[k] == x1 + x2
        assert report.trajectories[1].right_values[k] == x2 - x1


class TestConstancyPropagation:
    @pytest.mark.parametrize("picard", [True, False])
    def test_constant_component_keeps_its_bits(self, picard):
        flat = Derivator((0.0, 1.0),
                         [Segment(0.0, 1.0, ConstantProfile())], [])
        spec = SystemSpec(
            [identity(), flat],
            lambda t, x: np.array([x[0] + x[1], math.cos(t) + x[0]]),
            [1.0, 0.3],
        )
        report = solve(spec, SolveConfig(
            mesh=256, picard=picard, error_estimate=False))
        tr = report.trajectories[1]
        assert np.all(tr.left_values == 0.3)
        assert np.all(tr.right_values == 0.3)


class TestHorizonSelection:
    def test_desk_case(self):
        # mass over [0, t) is t up to the jump, then t + 0.8: radius 0.5
        # admits exactly the times through t = 0.5
        spec = scalar_growth(jumps=[Jump(0.5, 0.8)])
        bound = CaratheodoryBound(radius=0.5, dominators=[lambda t: 1.0])
        tau = select_horizon(spec, bound, mesh=1000)
        assert tau == 0.5
        assert bound.tau_star == 0.5

    def test_no_admissible_time_raises(self):
        spec = scalar_growth()
        bound = CaratheodoryBound(radius=1e-6, dominators=[lambda t: 1.0])
        with pytest.raises(HorizonSelectionError):
            select_horizon(spec, bound, mesh=512)

    def test_negative_dominator_rejected(self):
        spec = scalar_growth()
        bound = CaratheodoryBound(radius=1.0, dominators=[lambda t: t - 0.5])
        with pytest.raises(DomainError):
            select_horizon(spec, bound, mesh=128)

    def test_single_dominator_broadcasts(self):
        bound = CaratheodoryBound(radius=1.0, dominators=[lambda t: 2.0])
        h0 = bound.dominator_for(0, 3)
        h2 = bound.dominator_for(2, 3)
        assert h0(0.3) == h2(0.7) == 2.0

    def test_dominator_count_must_match(self):
        bound = CaratheodoryBound(radius=1.0, dominators=[lambda t: 1.0] * 2)
        with pytest.raises(DomainError):
            bound.dominator_for(0, 3)


class TestSystemGrid:
    def test_contains_breakpoints_and_jumps(self):
        third = 1.0 / 3.0
        d = Derivator((0.0, 1.0), [
            Segment(0.0, third, LinearProfile(1.0)),
            Segment(third, 1.0, LinearProfile(2.0)),
        ], [Jump(third, 0.5)])
        grid = system_grid([d], 1.0, 64)
        assert third in grid
        assert grid[0] == 0.0 and grid[-1] == 1.0
        assert np.all(np.diff(grid) > 0)


class TestValidation:
    def test_intervals_must_agree(self):
        with pytest.raises(DomainError):
            SystemSpec([identity(0.0, 1.0), identity(0.0, 2.0)],
                       lambda t, x: x, [1.0, 1.0])

    def test_initial_length_must_match(self):
        with pytest.raises(DomainError):
            SystemSpec([identity()], lambda t, x: x, [1.0, 2.0])

    def test_horizon_inside_the_interval(self):
        with pytest.raises(DomainError):
            SystemSpec([identity()], lambda t, x: x, [1.0], horizon=1.5)

    def test_at_least_one_derivator(self):
        with pytest.raises(DomainError):
            SystemSpec([], lambda t, x: x, [])

    def test_rhs_exceptions_are_wrapped(self):
        def boom(t, x):
            raise ValueError("nope")
        spec = SystemSpec([identity()], boom, [1.0])
        with pytest.raises(RhsEvaluationError):
            spec.call_rhs(0.0, spec.initial)

    def test_rhs_shape_is_checked(self):
        spec = SystemSpec([identity()], lambda t, x: np.ones(3), [1.0])
        with pytest.raises(RhsEvaluationError):
            spec.call_rhs(0.0, spec.initial)

    def test_rhs_must_be_finite(self):
        spec = SystemSpec([identity()], lambda t, x: np.array([np.inf]), [1.0])
        with pytest.raises(RhsEvaluationError):
            spec.call_rhs(0.0, spec.initial)
