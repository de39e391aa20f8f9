import numpy as np
import pytest

from ambc.models.allocation import SolveStatus
from ambc.services.time_allocation_service import TimeAllocationService
from tests.conftest import synthetic_config, synthetic_grid

STEP = 1e-3


def lp_instance(rng, metrics):
    """Random M=2 instance built around a strictly feasible reference schedule"""
    grid = synthetic_grid(rng, 2, 4)
    config = synthetic_config(2, 4, P_peak=0.5)
    alpha = rng.uniform(0.2, 0.9, 2)
    power = rng.uniform(0.05, 0.5, (2, 4))
    tau_ref = rng.uniform(0.2, 0.45, 2)

    lu = metrics.lu_slot_rates(alpha, power, grid, config) @ tau_ref
    energy = metrics.energy_coefficients(alpha, power, grid, config) @ tau_ref
    budget = float(tau_ref @ np.sum(power, axis=1))
    config = config.updated(d_req=0.9 * lu, e_min=list(0.9 * energy), p_bar=1.1 * budget)
    return grid, config, alpha, power


def grid_search(metrics, grid, config, alpha, power):
    c = metrics.bd_slot_rates(alpha, power, grid, config)
    d = metrics.lu_slot_rates(alpha, power, grid, config)
    e = metrics.energy_coefficients(alpha, power, grid, config)
    p = np.sum(power, axis=1)

    t1, t2 = np.meshgrid(np.arange(0.0, 1.0 + STEP / 2, STEP), np.arange(0.0, 1.0 + STEP / 2, STEP),
                         indexing='ij')
    ok = t1 + t2 <= 1.0 + 1e-12
    ok &= t1 * d[0] + t2 * d[1] >= config.d_req
    ok &= t1 * p[0] + t2 * p[1] <= config.p_bar
    for m in range(2):
        ok &= e[m, 0] * t1 + e[m, 1] * t2 >= config.e_min[m]
    q = np.minimum(t1 * c[0], t2 * c[1])
    return float(np.max(np.where(ok, q, -np.inf)))


class TestTimeAllocation:
    def test_matches_simplex_grid(self, metrics, rng):
        service = TimeAllocationService(metrics)
        for _ in range(50):
            grid, config, alpha, power = lp_instance(rng, metrics)
            result = service.solve_time_allocation(grid, config, alpha, power)
            assert result.status == SolveStatus.OPTIMAL
            oracle = grid_search(metrics, grid, config, alpha, power)
            assert result.objective >= oracle - 1e-6
            assert result.objective == pytest.approx(oracle, abs=2e-3)

    def test_unconstrained_balances_rates(self, metrics, rng):
        grid = synthetic_grid(rng, 2, 4)
        config = synthetic_config(2, 4, P_bar=100.0)
        alpha = np.full(2, 0.5)
        power = np.full((2, 4), 0.5)
        result = TimeAllocationService(metrics).solve_time_allocation(grid, config, alpha, power)
        c = metrics.bd_slot_rates(alpha, power, grid, config)
        # only the time budget binds: tau_m c_m equal and sum tau = 1
        assert np.sum(result.values) == pytest.approx(1.0, abs=1e-7)
        assert result.values[0] * c[0] == pytest.approx(result.values[1] * c[1], rel=1e-6)
        assert result.objective == pytest.approx(1.0 / (1.0 / c[0] + 1.0 / c[1]), rel=1e-6)

    def test_solution_satisfies_constraints(self, metrics, rng):
        service = TimeAllocationService(metrics)
        grid, config, alpha, power = lp_instance(rng, metrics)
        result = service.solve_time_allocation(grid, config, alpha, power)
        tau = result.values
        assert np.all(tau >= 0.0)
        assert np.sum(tau) <= 1.0 + 1e-7
        assert metrics.lu_slot_rates(alpha, power, grid, config) @ tau >= config.d_req - 1e-7
        assert result.max_residual <= 1e-6
        assert result.duals is not None and result.duals.shape == (2 * 2 + 3,)

    def test_impossible_requirement(self, metrics, rng):
        grid = synthetic_grid(rng, 2, 4)
        config = synthetic_config(2, 4, D=1e3)
        result = TimeAllocationService(metrics).solve_time_allocation(grid, config, np.full(2, 0.5),
                                                                      np.full((2, 4), 0.2))
        assert result.status == SolveStatus.INFEASIBLE
        assert result.values is None

    def test_energy_floor_forces_time(self, metrics, rng):
        grid = synthetic_grid(rng, 2, 4)
        alpha = np.array([0.9, 0.9])
        power = np.full((2, 4), 0.2)
        config = synthetic_config(2, 4, P_bar=100.0)
        e = metrics.energy_coefficients(alpha, power, grid, config)
        # BD 1 must take at least 30% of the frame from its neighbour's slot
        floor = 0.3 * e[0, 1]
        config = config.updated(e_min=[floor, 0.0])
        result = TimeAllocationService(metrics).solve_time_allocation(grid, config, alpha, power)
        assert e[0] @ result.values >= floor * (1 - 1e-6)

    def test_single_bd_takes_what_the_budget_allows(self, metrics, rng):
        service = TimeAllocationService(metrics)
        grid = synthetic_grid(rng, 1, 4)
        alpha = np.array([0.6])
        power = np.full((1, 4), 0.5)
        c = metrics.bd_slot_rates(alpha, power, grid, synthetic_config(1, 4))
        for budget, expected in ((0.5, 0.25), (100.0, 1.0)):
            result = service.solve_time_allocation(grid, synthetic_config(1, 4, P_bar=budget), alpha, power)
            assert result.values[0] == pytest.approx(expected, rel=1e-7)
            assert result.objective == pytest.approx(expected * c[0], rel=1e-7)


class TestDuality:
    def test_complementary_slackness(self, metrics, rng):
        service = TimeAllocationService(metrics)
        for _ in range(20):
            grid, config, alpha, power = lp_instance(rng, metrics)
            result = service.solve_time_allocation(grid, config, alpha, power)
            a_ub, b_ub, _ = service.build_program(grid, config, alpha, power)
            x = np.append(result.values, result.objective)
            slack = b_ub - a_ub @ x
            assert np.all(result.duals <= 1e-9)
            assert np.max(np.abs(result.duals * slack)) <= 1e-6
            # strong duality with zero lower bounds: -Q = b . y
            assert -result.objective == pytest.approx(float(b_ub @ result.duals), abs=1e-6)

    def test_no_feasible_direction_improves(self, metrics, rng):
        service = TimeAllocationService(metrics)
        for _ in range(10):
            grid, config, alpha, power = lp_instance(rng, metrics)
            result = service.solve_time_allocation(grid, config, alpha, power)
            a_ub, b_ub, c = service.build_program(grid, config, alpha, power)
            for _ in range(200):
                step = rng.standard_normal(2)
                tau = result.values + 1e-4 * step / np.linalg.norm(step)
                objective = float(np.min(tau * c))
                if np.any(tau < 0.0) or np.any(a_ub @ np.append(tau, objective) > b_ub + 1e-12):
                    continue
                assert objective <= result.objective + 1e-8
