import logging
import time
from typing import List, Optional

import numpy as np

from ambc.config import Config
from ambc.models.allocation import (
    AllocationState,
    IterationRecord,
    SolveStatus,
    SolveTrace,
    SubproblemResult,
    TerminationReason,
)
from ambc.models.channel import FrequencyGrid
from ambc.schemas.scenario import ScenarioConfig
from ambc.services.network_metrics_service import NetworkMetricsService
from ambc.services.power_allocation_service import PowerAllocationService
from ambc.services.reflection_service import ReflectionService
from ambc.services.time_allocation_service import TimeAllocationService
from ambc.utils.exceptions import InfeasibleError, IterationCapError, MonotonicityError, NumericalError

logger = logging.getLogger(__name__)

# Block order of one iteration and the state field each block updates
BLOCKS = (('time', 'tau'), ('reflection', 'alpha'), ('power', 'power'))

# Error raised for each abnormal termination
ERROR_BY_REASON = {
    TerminationReason.INFEASIBLE: InfeasibleError,
    TerminationReason.ITERATION_CAP: IterationCapError,
    TerminationReason.NUMERICAL_FAILURE: NumericalError,
    TerminationReason.MONOTONICITY_VIOLATION: MonotonicityError,
}


class BcdOptimizer:
    """Block coordinate descent over (tau, alpha, P)

    Each iteration solves the time LP, the reflection program and the
    SCO power program in turn, each with the other two blocks frozen.
    Once the state is feasible every block starts from a feasible
    incumbent, so the true min-throughput never decreases; this is
    checked after every block.
    """

    def __init__(self,
                 metrics: Optional[NetworkMetricsService] = None,
                 time_solver: Optional[TimeAllocationService] = None,
                 reflection_solver: Optional[ReflectionService] = None,
                 power_solver: Optional[PowerAllocationService] = None,
                 iteration_cap: int = Config.ITERATION_CAP,
                 monotone_slack: float = Config.MONOTONE_SLACK):
        """Dependency Injection"""
        self.metrics = metrics or NetworkMetricsService()
        self.time_solver = time_solver or TimeAllocationService(self.metrics)
        self.reflection_solver = reflection_solver or ReflectionService(self.metrics)
        self.power_solver = power_solver or PowerAllocationService(self.metrics)
        self.iteration_cap = iteration_cap
        self.monotone_slack = monotone_slack

    def default_init(self, grid: FrequencyGrid, config: ScenarioConfig) -> AllocationState:
        """Equal time shares, the average power budget spread evenly, half reflection"""
        count, subcarriers = grid.num_bds, grid.num_subcarriers
        state = AllocationState(
            tau=np.full(count, 1.0 / count),
            alpha=np.full(count, 0.5),
            power=np.full((count, subcarriers), min(config.p_bar / subcarriers, config.p_peak)),
        )
        return self.metrics.evaluate(state, grid, config)

    def solve_block(self, block: str, state: AllocationState, grid: FrequencyGrid,
                    config: ScenarioConfig) -> SubproblemResult:
        if block == 'time':
            return self.time_solver.solve_time_allocation(grid, config, state.alpha, state.power)
        if block == 'reflection':
            return self.reflection_solver.solve_reflection(grid, config, state.tau, state.power)
        return self.power_solver.solve_power_sco(grid, config, state.tau, state.alpha, state.power)

    def optimize(self, grid: FrequencyGrid, config: ScenarioConfig,
                 init: Optional[AllocationState] = None) -> SolveTrace:
        if init is None:
            init = self.default_init(grid, config)
        state = self.metrics.evaluate(init, grid, config)
        initial_objective = state.objective

        capacity = self.metrics.lu_rate_upper_bound(grid, config)
        if config.d_req > capacity:
            logger.info(f"D={config.d_req:g} exceeds the LU capacity bound {capacity:.6g}; instance infeasible")
            return self._trace([], state, TerminationReason.INFEASIBLE, initial_objective, [])

        feasible = self.metrics.check_feasibility(state, grid, config).feasible
        previous = state.objective
        records: List[IterationRecord] = []
        subproblems: List[SubproblemResult] = []
        reason = TerminationReason.ITERATION_CAP

        for index in range(1, self.iteration_cap + 1):
            started = time.perf_counter()
            statuses, objectives = {}, {}
            failed = None

            for block, attribute in BLOCKS:
                result = self.solve_block(block, state, grid, config)
                subproblems.append(result)
                statuses[block] = result.status.value
                if not result.ok:
                    failed = result
                    break
                if block == 'power':
                    self._check_bound_tightness(state, grid, config)

                candidate = self.metrics.evaluate(state.updated(**{attribute: result.values}), grid, config)
                if feasible:
                    if candidate.objective < state.objective:
                        loss = state.objective - candidate.objective
                        log = logger.warning if loss > Config.FEASIBILITY_TOL else logger.debug
                        log(f"Iteration {index}: {block} block lost {loss:.3g}, keeping the incumbent")
                        candidate = state
                    if candidate.objective < previous - self.monotone_slack:
                        logger.error(f"Objective decreased in the {block} block of iteration {index}")
                        return self._trace(records, state, TerminationReason.MONOTONICITY_VIOLATION,
                                           initial_objective, subproblems)
                else:
                    feasible = self.metrics.check_feasibility(candidate, grid, config).feasible
                state = candidate
                objectives[block] = state.objective

            if failed is not None:
                if index == 1 and failed.status == SolveStatus.INFEASIBLE:
                    logger.info(f"Instance infeasible: {failed.block} block on the first iteration")
                    reason = TerminationReason.INFEASIBLE
                else:
                    logger.warning(f"Iteration {index}: {failed.block} block reported {failed.status.value}; "
                                   f"returning the incumbent")
                    reason = TerminationReason.NUMERICAL_FAILURE
                break

            report = self.metrics.check_feasibility(state, grid, config)
            if not report.feasible:
                logger.warning(f"Iteration {index} left constraints violated: {', '.join(report.violated)}")
                reason = TerminationReason.NUMERICAL_FAILURE
                break
            feasible = True

            records.append(IterationRecord(
                index=index,
                objective=state.objective,
                tau=state.tau.tolist(),
                alpha=state.alpha.tolist(),
                slot_power=np.sum(state.power, axis=1).tolist(),
                block_status=statuses,
                block_objectives=objectives,
                wall_time=time.perf_counter() - started,
            ))
            logger.debug(f"Iteration {index}: Q={state.objective:.8g} (change {state.objective - previous:.3g})")

            if abs(state.objective - previous) <= config.epsilon:
                reason = TerminationReason.CONVERGED
                break
            previous = state.objective

        if reason == TerminationReason.ITERATION_CAP:
            logger.warning(f"Iteration cap {self.iteration_cap} reached at Q={state.objective:.8g}")
        return self._trace(records, state, reason, initial_objective, subproblems)

    def require_converged(self, trace: SolveTrace):
        """Raise the error matching an abnormal termination"""
        error = ERROR_BY_REASON.get(trace.termination_reason)
        if error is not None:
            raise error(f"Optimization ended with {trace.termination_reason.value} after "
                        f"{trace.num_iterations} iteration(s), Q={trace.final_state.objective:.6g}")

    def require_monotone(self, trace: SolveTrace):
        """Raise if the recorded objective sequence ever decreased"""
        steps = np.diff(trace.objectives)
        if trace.termination_reason == TerminationReason.MONOTONICITY_VIOLATION \
                or np.any(steps < -self.monotone_slack):
            raise MonotonicityError(f"Objective sequence decreased: {trace.objectives}")

    def _check_bound_tightness(self, state: AllocationState, grid: FrequencyGrid, config: ScenarioConfig):
        """The LU lower bound equals the LU rate at its expansion point"""
        bound = self.power_solver.sco_lower_bound(state.power, state.power, grid, state.tau, state.alpha, config)
        exact = self.metrics.lu_throughput(state, grid, config)
        if abs(bound - exact) > 1e-9 * max(1.0, abs(exact)):
            raise MonotonicityError(f"LU bound not tight at the local point: {bound} vs {exact}")

    @staticmethod
    def _trace(records, state, reason, initial_objective, subproblems) -> SolveTrace:
        return SolveTrace(
            iterations=records,
            final_state=state,
            converged=reason == TerminationReason.CONVERGED,
            termination_reason=reason,
            initial_objective=initial_objective,
            subproblems=subproblems,
        )
