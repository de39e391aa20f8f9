import logging
from typing import Optional

import numpy as np

from ambc.config import Config
from ambc.models.allocation import SolveStatus, SubproblemResult
from ambc.models.channel import FrequencyGrid
from ambc.schemas.scenario import ScenarioConfig
from ambc.services.network_metrics_service import NetworkMetricsService

logger = logging.getLogger(__name__)


class ReflectionService:
    """Power reflection coefficients for frozen time portions and power

    R_m grows with alpha_m while the LU rate and every harvested energy shrink
    with it, so for a target level Q the smallest alpha meeting R_m >= Q is the
    best candidate and feasibility of Q is monotone. The block is solved by
    bisection on Q with closed-form inversion of the rate expression.
    """

    def __init__(self, metrics: Optional[NetworkMetricsService] = None,
                 tolerance: float = Config.BISECTION_TOL,
                 slack: float = Config.FEASIBILITY_TOL):
        """Dependency Injection"""
        self.metrics = metrics or NetworkMetricsService()
        self.tolerance = tolerance
        self.slack = slack

    def full_reflection_snrs(self, grid: FrequencyGrid, config: ScenarioConfig,
                             power_fix: np.ndarray) -> np.ndarray:
        """gamma_m at alpha_m = 1"""
        return self.metrics.bd_unit_snrs(np.ones(grid.num_bds), power_fix, grid, config)

    def minimal_reflection(self, level: float, tau_fix: np.ndarray, unit_snr: np.ndarray,
                           config: ScenarioConfig, num_subcarriers: int) -> np.ndarray:
        """alpha_m(Q) = (base^(N Q / tau_m) - 1) / gamma_m(alpha=1), unclipped"""
        exponent = num_subcarriers * level / tau_fix * config.log_scale
        return np.expm1(exponent) / unit_snr

    def constraints_hold(self, alpha: np.ndarray, grid: FrequencyGrid, config: ScenarioConfig,
                         tau_fix: np.ndarray, power_fix: np.ndarray, slack: float = 0.0) -> bool:
        """LU requirement and energy floors at a given reflection vector, up to a relative slack"""
        lu_rate = tau_fix @ self.metrics.lu_slot_rates(alpha, power_fix, grid, config)
        energy = self.metrics.energy_coefficients(alpha, power_fix, grid, config) @ tau_fix
        lu_ok = lu_rate >= config.d_req * (1.0 - slack)
        energy_ok = np.all(energy >= config.e_min_array * (1.0 - slack))
        return bool(lu_ok and energy_ok)

    def level_feasible(self, level: float, grid: FrequencyGrid, config: ScenarioConfig,
                       tau_fix: np.ndarray, power_fix: np.ndarray) -> bool:
        """True when some alpha in [0, 1]^M reaches min-throughput >= level"""
        if level <= 0.0:
            return self.constraints_hold(np.zeros(grid.num_bds), grid, config, tau_fix, power_fix)
        unit_snr = self.full_reflection_snrs(grid, config, power_fix)
        if np.any(tau_fix <= 0.0) or np.any(unit_snr <= 0.0):
            return False
        alpha = self.minimal_reflection(level, tau_fix, unit_snr, config, grid.num_subcarriers)
        if np.any(alpha > 1.0):
            return False
        return self.constraints_hold(alpha, grid, config, tau_fix, power_fix)

    def solve_reflection(self, grid: FrequencyGrid, config: ScenarioConfig,
                         tau_fix: np.ndarray, power_fix: np.ndarray) -> SubproblemResult:
        count = grid.num_bds
        zeros = np.zeros(count)
        # the slack absorbs round-off of the LP that produced tau_fix
        if not self.constraints_hold(zeros, grid, config, tau_fix, power_fix, self.slack):
            return SubproblemResult(block='reflection', status=SolveStatus.INFEASIBLE,
                                    message="LU or energy constraint fails even without reflection")

        unit_snr = self.full_reflection_snrs(grid, config, power_fix)
        if np.any(tau_fix <= 0.0) or np.any(unit_snr <= 0.0):
            # some BD has no rate at all: Q = 0 regardless of alpha
            return SubproblemResult(block='reflection', status=SolveStatus.OPTIMAL, values=zeros,
                                    objective=0.0, degenerate=True,
                                    message="zero time portion or zero backscatter gain")

        ones = np.ones(count)
        if self.constraints_hold(ones, grid, config, tau_fix, power_fix):
            rates = tau_fix * np.log1p(unit_snr) / config.log_scale / grid.num_subcarriers
            return SubproblemResult(block='reflection', status=SolveStatus.OPTIMAL, values=ones,
                                    objective=float(np.min(rates)))

        # feasible at 0, infeasible at the all-reflect corner level
        low = 0.0
        high = float(np.min(tau_fix * np.log1p(unit_snr))) / config.log_scale / grid.num_subcarriers
        iterations = 0
        while high - low > self.tolerance * max(1.0, high):
            middle = 0.5 * (low + high)
            if self.level_feasible(middle, grid, config, tau_fix, power_fix):
                low = middle
            else:
                high = middle
            iterations += 1

        alpha = np.clip(self.minimal_reflection(low, tau_fix, unit_snr, config, grid.num_subcarriers), 0.0, 1.0)
        rates = tau_fix * np.log1p(alpha * unit_snr) / config.log_scale / grid.num_subcarriers
        logger.debug(f"Reflection bisection converged in {iterations} steps at Q={low:.6g}")
        return SubproblemResult(
            block='reflection',
            status=SolveStatus.OPTIMAL,
            values=alpha,
            objective=float(np.min(rates)),
            iterations=iterations,
        )
