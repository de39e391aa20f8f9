import logging
from functools import lru_cache
from typing import List, Optional

import cvxpy as cp
import numpy as np

from ambc.config import Config
from ambc.models.allocation import SolveStatus, SubproblemResult
from ambc.models.channel import FrequencyGrid
from ambc.schemas.scenario import ScenarioConfig
from ambc.services.network_metrics_service import NetworkMetricsService

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-300

# Tried after the configured solver, in this order, when installed
FALLBACK_SOLVERS = ('CLARABEL', 'ECOS', 'SCS')

_CVXPY_STATUS = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.INACCURATE,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
}


class PowerProgram:
    """Convex restriction of the power block, parametrized once per (M, N)

    The variable is x = P / P_peak and q is the min throughput in units of
    a reference level. Gains are pre-divided by sigma^2 so every log argument
    has the form 1 + gain * x. The LU constraint uses the concave lower bound
    linearized at the local point. The LU and energy rows are divided by their
    requirements so every right-hand side is 0 or 1.
    """

    def __init__(self, count: int, subcarriers: int):
        self.x = cp.Variable((count, subcarriers), nonneg=True)
        self.q = cp.Variable()
        self.lu_terms = cp.Variable(count)

        self.snr_gain = cp.Parameter((count, subcarriers), nonneg=True)
        self.rate_weight = cp.Parameter(count, nonneg=True)
        self.lu_gain = cp.Parameter((count, subcarriers), nonneg=True)
        self.lu_slope = cp.Parameter((count, subcarriers), nonneg=True)
        self.lu_offset = cp.Parameter(count)
        self.lu_weight = cp.Parameter(count, nonneg=True)
        self.lu_requirement = cp.Parameter(nonneg=True)
        self.energy_gain = [cp.Parameter((count, subcarriers), nonneg=True) for _ in range(count)]
        self.energy_requirement = cp.Parameter(count, nonneg=True)
        self.budget_weight = cp.Parameter(count, nonneg=True)

        snr = cp.sum(cp.multiply(self.snr_gain, self.x), axis=1)
        lu_bound = cp.sum(cp.log(1 + cp.multiply(self.lu_gain, self.x))
                          - cp.multiply(self.lu_slope, self.x), axis=1) + self.lu_offset
        constraints = [
            cp.log(1 + snr) >= cp.multiply(self.rate_weight, self.q),
            self.lu_terms <= lu_bound,
            self.lu_weight @ self.lu_terms >= self.lu_requirement,
            self.budget_weight @ cp.sum(self.x, axis=1) <= 1,
            self.x <= 1,
        ]
        constraints += [cp.sum(cp.multiply(gain, self.x)) >= self.energy_requirement[m]
                        for m, gain in enumerate(self.energy_gain)]
        self.problem = cp.Problem(cp.Maximize(self.q), constraints)


@lru_cache(maxsize=16)
def _program(count: int, subcarriers: int) -> PowerProgram:
    logger.debug(f"Building power program for M={count}, N={subcarriers}")
    return PowerProgram(count, subcarriers)


class PowerAllocationService:
    """Subcarrier power block solved by successive convex optimization

    The LU rate is a difference of concave functions of P; linearizing the
    subtracted term at P_local gives a concave lower bound that is tight at
    P_local, so any P meeting the bound also meets the true LU constraint.

    A solver answer is accepted only after its constraint residuals are
    re-checked at the restored powers. When no solver gives an acceptable
    answer the local point, which is feasible for the restriction, is returned.
    """

    def __init__(self, metrics: Optional[NetworkMetricsService] = None,
                 solver: Optional[str] = Config.SOLVER,
                 tolerance: float = Config.FEASIBILITY_TOL):
        """Dependency Injection"""
        self.metrics = metrics or NetworkMetricsService()
        self.solver = solver
        self.tolerance = tolerance
        self.solvers = self.solver_chain()

    def solver_chain(self) -> List[Optional[str]]:
        """Configured solver first, then the installed fallbacks; None lets cvxpy choose"""
        installed = set(cp.installed_solvers())
        chain = [self.solver] if self.solver else []
        chain += [name for name in FALLBACK_SOLVERS if name in installed and name not in chain]
        return chain or [None]

    def sco_lower_bound(self, power: np.ndarray, power_local: np.ndarray, grid: FrequencyGrid,
                        tau_fix: np.ndarray, alpha_fix: np.ndarray, config: ScenarioConfig) -> float:
        """Concave lower bound of the LU throughput, tight at power_local"""
        noise = self.metrics.noise_power(config)
        interference = alpha_fix[:, None] * grid.interference_gain
        total = (interference + grid.direct_gain[None, :]) * power + noise
        local = interference * power_local + noise
        terms = (np.log(np.maximum(total, LOG_FLOOR))
                 - np.log(np.maximum(local, LOG_FLOOR))
                 - interference * (power - power_local) / local)
        per_slot = np.sum(terms, axis=1) / grid.num_subcarriers / config.log_scale
        return float(tau_fix @ per_slot)

    def solve_power_sco(self, grid: FrequencyGrid, config: ScenarioConfig, tau_fix: np.ndarray,
                        alpha_fix: np.ndarray, power_local: np.ndarray) -> SubproblemResult:
        rates_local = tau_fix * self.metrics.bd_slot_rates(alpha_fix, power_local, grid, config)
        if np.any(tau_fix <= 0.0):
            # a BD without air time pins Q at 0; the incumbent is optimal
            return SubproblemResult(block='power', status=SolveStatus.OPTIMAL, values=power_local.copy(),
                                    objective=0.0, degenerate=True, message="zero time portion")

        local_objective = float(np.min(rates_local))
        local_residual = self.max_residual(power_local, power_local, grid, config, tau_fix, alpha_fix)
        program = _program(grid.num_bds, grid.num_subcarriers)
        self._assign(program, grid, config, tau_fix, alpha_fix, power_local, local_objective)

        inaccurate = None
        infeasible = False
        for solver in self.solvers:
            result = self._attempt(program, solver, grid, config, tau_fix, alpha_fix, power_local)
            if result.status == SolveStatus.OPTIMAL:
                # the local point is feasible, so the optimum is never worse than it
                if result.objective < local_objective and local_residual <= self.tolerance:
                    result.values, result.objective = power_local.copy(), local_objective
                    result.max_residual = local_residual
                return result
            if result.status == SolveStatus.INACCURATE and inaccurate is None:
                inaccurate = result
            infeasible = infeasible or result.status == SolveStatus.INFEASIBLE

        if inaccurate is not None and inaccurate.objective >= local_objective:
            logger.debug(f"Power block: accepting an uncertified {inaccurate.solver} answer")
            return inaccurate
        if local_residual <= self.tolerance:
            logger.warning(f"Power block: no solver answer accepted ({', '.join(map(str, self.solvers))}), "
                           f"keeping the local point at Q={local_objective:.6g}")
            return SubproblemResult(block='power', status=SolveStatus.FALLBACK, values=power_local.copy(),
                                    objective=local_objective, max_residual=local_residual,
                                    message="no solver answer accepted")
        status = SolveStatus.INFEASIBLE if infeasible else SolveStatus.NUMERICAL_FAILURE
        return SubproblemResult(block='power', status=status, max_residual=local_residual,
                                message="local point violates the restriction and no solver answer was accepted")

    def max_residual(self, power: np.ndarray, power_local: np.ndarray, grid: FrequencyGrid,
                     config: ScenarioConfig, tau_fix: np.ndarray, alpha_fix: np.ndarray) -> float:
        """Largest violation of the restricted problem's constraints at power

        Energy, budget and box violations are relative to E_min, P_bar and P_peak.
        """
        lower_bound = self.sco_lower_bound(power, power_local, grid, tau_fix, alpha_fix, config)
        energy = self.metrics.energy_coefficients(alpha_fix, power, grid, config) @ tau_fix
        violations = [
            config.d_req - lower_bound,
            -float(np.min(self.metrics.energy_slack(energy, config))),
            (float(tau_fix @ np.sum(power, axis=1)) - config.p_bar) / config.p_bar,
            float(np.max(power - config.p_peak)) / config.p_peak,
            float(np.max(-power)) / config.p_peak,
        ]
        return max(0.0, max(violations))

    def _attempt(self, program: PowerProgram, solver: Optional[str], grid: FrequencyGrid,
                 config: ScenarioConfig, tau_fix: np.ndarray, alpha_fix: np.ndarray,
                 power_local: np.ndarray) -> SubproblemResult:
        """One solve with one solver; the answer is checked against the restriction"""
        name = solver or 'default'
        try:
            program.problem.solve(solver=solver, warm_start=False)
        except cp.SolverError as e:
            logger.debug(f"Power block: solver {name} failed: {e}")
            return SubproblemResult(block='power', status=SolveStatus.NUMERICAL_FAILURE,
                                    message=str(e), solver=name)

        status = _CVXPY_STATUS.get(program.problem.status, SolveStatus.NUMERICAL_FAILURE)
        stats = program.problem.solver_stats
        iterations = int(stats.num_iters or 0) if stats is not None else 0
        if status not in (SolveStatus.OPTIMAL, SolveStatus.INACCURATE) or program.x.value is None:
            logger.debug(f"Power block: {name} ended with status {program.problem.status}")
            return SubproblemResult(block='power', status=status, iterations=iterations,
                                    message=str(program.problem.status), solver=name)

        power = self._restore(program.x.value, tau_fix, config)
        residual = self.max_residual(power, power_local, grid, config, tau_fix, alpha_fix)
        if residual > self.tolerance:
            logger.debug(f"Power block: {name} answer rejected, residual {residual:.3g}")
            return SubproblemResult(block='power', status=SolveStatus.NUMERICAL_FAILURE, iterations=iterations,
                                    max_residual=residual, message="constraint residual above tolerance",
                                    solver=name)

        rates = tau_fix * self.metrics.bd_slot_rates(alpha_fix, power, grid, config)
        return SubproblemResult(
            block='power',
            status=status,
            values=power,
            objective=float(np.min(rates)),
            iterations=iterations,
            max_residual=residual,
            solver=name,
        )

    def _assign(self, program: PowerProgram, grid: FrequencyGrid, config: ScenarioConfig,
                tau_fix: np.ndarray, alpha_fix: np.ndarray, power_local: np.ndarray,
                local_objective: float):
        noise = self.metrics.noise_power(config)
        peak = config.p_peak
        subcarriers = grid.num_subcarriers
        interference = alpha_fix[:, None] * grid.interference_gain / noise
        local = np.clip(power_local, 0.0, peak)
        snr_gain = alpha_fix[:, None] * grid.cascaded_gain * peak / noise

        # q is measured in units of the local objective, or of the full-peak rate when that is 0
        reference = local_objective
        if reference <= 0.0:
            reference = float(np.min(tau_fix * np.log1p(np.sum(snr_gain, axis=1)))) / subcarriers / config.log_scale
        reference = reference if reference > 0.0 else 1.0

        program.snr_gain.value = snr_gain
        program.rate_weight.value = subcarriers * config.log_scale / tau_fix * reference
        program.lu_gain.value = (interference + grid.direct_gain[None, :] / noise) * peak
        slope = interference * peak / (1.0 + interference * local)
        program.lu_slope.value = slope
        program.lu_offset.value = np.sum(slope * local / peak - np.log1p(interference * local), axis=1)
        lu_scale = config.d_req if config.d_req > 0.0 else 1.0
        program.lu_weight.value = tau_fix / (subcarriers * config.log_scale * lu_scale)
        program.lu_requirement.value = config.d_req / lu_scale

        # E_m = sum_{r,k} eta |F_mk|^2 w_mr tau_r P_rk, w = 1 - alpha_m on the own slot and 1 elsewhere
        absorbed = np.ones((grid.num_bds, grid.num_bds))
        np.fill_diagonal(absorbed, np.clip(1.0 - alpha_fix, 0.0, 1.0))
        requirement = np.zeros(grid.num_bds)
        for m, parameter in enumerate(program.energy_gain):
            gain = config.eta * grid.forward_gain[m][None, :] * (absorbed[m] * tau_fix)[:, None] * peak
            floor = config.e_min_array[m]
            scale = floor if floor > 0.0 else max(float(np.sum(gain)), LOG_FLOOR)
            parameter.value = gain / scale
            requirement[m] = floor / scale
        program.energy_requirement.value = requirement
        program.budget_weight.value = tau_fix * peak / config.p_bar

    @staticmethod
    def _restore(x: np.ndarray, tau_fix: np.ndarray, config: ScenarioConfig) -> np.ndarray:
        """Back to watts, clipped to the box and pulled inside the budget"""
        power = np.clip(x, 0.0, 1.0) * config.p_peak
        used = float(tau_fix @ np.sum(power, axis=1))
        if used > config.p_bar:
            power *= config.p_bar / used
        return power
