import logging
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from ambc.models.allocation import SolveStatus, SubproblemResult
from ambc.models.channel import FrequencyGrid
from ambc.schemas.scenario import ScenarioConfig
from ambc.services.network_metrics_service import NetworkMetricsService

logger = logging.getLogger(__name__)

# scipy linprog status -> block status
_LINPROG_STATUS = {
    0: SolveStatus.OPTIMAL,
    2: SolveStatus.INFEASIBLE,
}


class TimeAllocationService:
    """Backscatter time portions for frozen reflection and power

    With alpha and P fixed every constraint is linear in (tau, Q):
    R_m = tau_m c_m, the LU rate is d . tau, energy is e @ tau and the power
    budget is p . tau, so the block is a small LP over M + 1 variables.
    """

    def __init__(self, metrics: Optional[NetworkMetricsService] = None):
        """Dependency Injection"""
        self.metrics = metrics or NetworkMetricsService()

    def build_program(self, grid: FrequencyGrid, config: ScenarioConfig,
                      alpha_fix: np.ndarray, power_fix: np.ndarray):
        """Inequality form A_ub x <= b_ub over x = [tau_1 .. tau_M, Q], rows normalized"""
        count = grid.num_bds
        c = self.metrics.bd_slot_rates(alpha_fix, power_fix, grid, config)
        d = self.metrics.lu_slot_rates(alpha_fix, power_fix, grid, config)
        e = self.metrics.energy_coefficients(alpha_fix, power_fix, grid, config)
        p = np.sum(power_fix, axis=1)

        rate_rows = np.hstack([-np.diag(c), np.ones((count, 1))])
        lu_row = np.append(-d, 0.0)[None, :]

        # energy rows are divided by E_min so the solver tolerance is relative to the floor;
        # E_min = 0 rows stay trivially satisfied
        floor = config.e_min_array
        energy_scale = np.where(floor > 0.0, floor, np.maximum(e.max(axis=1), 1e-300))
        energy_rows = np.hstack([-e / energy_scale[:, None], np.zeros((count, 1))])
        budget_row = np.append(p / config.p_bar, 0.0)[None, :]
        time_row = np.append(np.ones(count), 0.0)[None, :]

        a_ub = np.vstack([rate_rows, lu_row, energy_rows, budget_row, time_row])
        b_ub = np.concatenate([
            np.zeros(count),
            [-config.d_req],
            -config.e_min_array / energy_scale,
            [1.0],
            [1.0],
        ])
        return a_ub, b_ub, c

    def solve_time_allocation(self, grid: FrequencyGrid, config: ScenarioConfig,
                              alpha_fix: np.ndarray, power_fix: np.ndarray) -> SubproblemResult:
        count = grid.num_bds
        a_ub, b_ub, c = self.build_program(grid, config, alpha_fix, power_fix)
        objective = np.zeros(count + 1)
        objective[-1] = -1.0
        bounds = [(0.0, None)] * count + [(None, None)]

        result = linprog(objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method='highs')
        status = _LINPROG_STATUS.get(result.status, SolveStatus.NUMERICAL_FAILURE)
        iterations = int(getattr(result, 'nit', 0) or 0)
        if status != SolveStatus.OPTIMAL:
            logger.debug(f"Time allocation LP ended with status {status.value}: {result.message}")
            return SubproblemResult(block='time', status=status, iterations=iterations, message=result.message)

        tau = np.clip(result.x[:count], 0.0, None)
        x = np.append(tau, result.x[-1])
        duals = None
        if getattr(result, 'ineqlin', None) is not None:
            duals = np.asarray(result.ineqlin.marginals, dtype=float)

        return SubproblemResult(
            block='time',
            status=status,
            values=tau,
            objective=float(np.min(tau * c)),
            iterations=iterations,
            max_residual=float(max(0.0, np.max(a_ub @ x - b_ub))),
            duals=duals,
        )
