"""Tests for RK3 stepping and the run driver."""

import math

import numpy as np
import pytest

from weno_ds import flux_models as fm
from weno_ds.errors import NonPhysicalState, SolverAbort
from weno_ds.problems import parse_problem
from weno_ds.reference_oracles import exact_reference
from weno_ds.time_integration import StepMode, StepPlan, adaptive_dt, rk3_step, run
from weno_ds.weno_kernel import SchemeConfig, Weighting

Z = SchemeConfig(Weighting.Z)

# WENO-Z density L-infinity error on sod-mod, N=64, T=0.1
SOD_MOD_Z_RHO_LINF = 0.145601


class TestStepPlan:
    def test_fixed(self):
        plan = StepPlan.fixed(0.3, 100)
        assert plan.mode is StepMode.FIXED_COUNT
        assert plan.dt == pytest.approx(0.003)

    def test_adaptive(self):
        plan = StepPlan.adaptive(0.1)
        assert plan.mode is StepMode.ADAPTIVE_CFL
        assert plan.cfl == 0.9
        with pytest.raises(ValueError):
            plan.dt

    def test_mode_from_string(self):
        assert StepPlan(1.0, "cfl", cfl=0.5).mode is StepMode.ADAPTIVE_CFL

    @pytest.mark.parametrize("kwargs", [
        dict(final_time=0.0, n_steps=10),
        dict(final_time=-1.0, n_steps=10),
        dict(final_time=1.0, n_steps=0),
        dict(final_time=1.0),
        dict(final_time=1.0, mode=StepMode.ADAPTIVE_CFL, cfl=0.0),
        dict(final_time=1.0, mode=StepMode.ADAPTIVE_CFL, cfl=1.5),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            StepPlan(**kwargs)


class TestRk3Step:
    def test_exponential_decay_third_order(self):
        errors = []
        for n in (20, 40):
            u, dt = np.array([1.0]), 1.0 / n
            for _ in range(n):
                u = rk3_step(u, dt, lambda v: -v)
            errors.append(abs(u[0] - math.exp(-1.0)))
        assert errors[0] / errors[1] == pytest.approx(8.0, rel=0.1)

    def test_single_step_matches_taylor_polynomial(self):
        dt = 0.1
        u = rk3_step(np.array([2.0]), dt, lambda v: -v)
        assert u[0] == pytest.approx(2.0 * (1 - dt + dt ** 2 / 2 - dt ** 3 / 6), rel=1e-14)

    def test_linear_rhs_is_exact(self):
        u = rk3_step(np.array([1.0]), 0.5, lambda v: np.array([3.0]))
        assert u[0] == pytest.approx(2.5, rel=1e-15)

    def test_rejects_non_positive_dt(self):
        with pytest.raises(ValueError):
            rk3_step(np.zeros(2), 0.0, lambda v: v)

    def test_non_finite_stage_aborts_with_step(self):
        with pytest.raises(SolverAbort) as info:
            rk3_step(np.ones(2), 0.1, lambda v: v * np.inf, step=7)
        assert info.value.step == 7
        assert "step 7" in str(info.value)


class TestRun:
    def test_fixed_run_records_final_only_by_default(self):
        problem = parse_problem("transport")
        grid = problem.make_grid(32)
        trajectory = run(problem, Z, StepPlan.fixed(0.5, 40), grid)
        assert trajectory.times == [0.5]
        assert trajectory.n_steps == 40
        assert trajectory.final.shape == (32,)
        assert trajectory.final_time == 0.5

    def test_record_every(self):
        problem = parse_problem("transport")
        grid = problem.make_grid(16)
        trajectory = run(problem, Z, StepPlan.fixed(0.5, 10), grid, record_every=5)
        np.testing.assert_allclose(trajectory.times, [0.0, 0.25, 0.5])
        np.testing.assert_allclose(trajectory.states[0], problem.initial_values(grid))

    def test_fixed_snapshots_use_nearest_step(self):
        problem = parse_problem("transport")
        grid = problem.make_grid(16)
        trajectory = run(problem, Z, StepPlan.fixed(0.5, 10), grid, snapshot_times=[0.21])
        np.testing.assert_allclose(trajectory.times, [0.0, 0.2, 0.5])

    def test_initial_state_override(self):
        problem = parse_problem("burgers")
        grid = problem.make_grid(16)
        start = np.full(16, 0.5)
        trajectory = run(problem, Z, StepPlan.fixed(0.1, 5), grid, initial=start)
        np.testing.assert_allclose(trajectory.final, 0.5, rtol=0, atol=1e-15)

    def test_transport_accuracy(self):
        problem = parse_problem("transport")
        grid = problem.make_grid(64)
        final = run(problem, Z, StepPlan.fixed(0.5, 100), grid).final
        x = grid.nodes(problem.boundary)
        assert np.max(np.abs(final - np.sin(np.pi * (x - 0.5)))) < 1e-4

    def test_burgers_conserves_mass(self):
        problem = parse_problem("burgers:ic=step,z=1.5")
        grid = problem.make_grid(128)
        trajectory = run(problem, Z, StepPlan.fixed(0.3, 100), grid, record_every=10)
        masses = [np.sum(state) * grid.dx for state in trajectory.states]
        np.testing.assert_allclose(masses, masses[0], rtol=0, atol=1e-11)

    def test_adaptive_needs_euler(self):
        problem = parse_problem("burgers")
        with pytest.raises(ValueError):
            run(problem, Z, StepPlan.adaptive(0.3), problem.make_grid(16))

    def test_adaptive_dt_matches_cfl(self):
        problem = parse_problem("euler:preset=sod")
        grid = problem.make_grid(64)
        state = problem.initial_values(grid)
        assert adaptive_dt(problem, state, grid.dx, 0.9) == pytest.approx(0.9 * grid.dx / math.sqrt(1.4))

    def test_sod_mod_stays_physical(self):
        problem = parse_problem("euler:preset=sod-mod")
        grid = problem.make_grid(64)
        trajectory = run(problem, Z, StepPlan.adaptive(0.2), grid)
        rho, u, p = fm.primitive_from_conserved(trajectory.final)
        assert trajectory.final.shape == (3, 65)
        assert trajectory.final_time == 0.2
        assert np.all(rho > 0) and np.all(p > 0)
        assert trajectory.n_steps > 10

    def test_sod_mod_density_error_matches_published_baseline(self):
        problem = parse_problem("euler:preset=sod-mod")
        grid = problem.make_grid(64)
        trajectory = run(problem, Z, StepPlan.adaptive(problem.final_time), grid)
        rho, _, p = fm.primitive_from_conserved(trajectory.final)
        assert problem.final_time == pytest.approx(0.1)
        assert np.all(rho > 0) and np.all(p > 0)
        rho_exact, _, _ = exact_reference(problem, grid, [problem.final_time])[0]
        linf = float(np.max(np.abs(rho - rho_exact)))
        assert SOD_MOD_Z_RHO_LINF / 2 <= linf <= 2 * SOD_MOD_Z_RHO_LINF

    def test_adaptive_snapshots_land_exactly(self):
        problem = parse_problem("euler:preset=sod")
        grid = problem.make_grid(32)
        trajectory = run(problem, Z, StepPlan.adaptive(0.1), grid, snapshot_times=[0.05, 0.5])
        assert trajectory.times == [0.0, 0.05, 0.1]

    def test_positivity_violation_reports_step(self):
        problem = parse_problem("euler:preset=sod")
        grid = problem.make_grid(32)
        state = fm.conserved_from_primitive(np.ones(33), np.zeros(33), np.ones(33))
        state[2, 10:20] = -2.5
        with pytest.raises(NonPhysicalState) as info:
            run(problem, Z, StepPlan.fixed(0.1, 4), grid, initial=state)
        assert info.value.step == 0
        assert info.value.location is not None
        assert info.value.quantity == "c^2"
