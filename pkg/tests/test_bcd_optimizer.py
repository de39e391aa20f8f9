import numpy as np
import pytest

from ambc.models.allocation import (
    AllocationState,
    IterationRecord,
    SolveStatus,
    SolveTrace,
    SubproblemResult,
    TerminationReason,
)
from ambc.services.bcd_optimizer_service import BcdOptimizer
from ambc.services.time_allocation_service import TimeAllocationService
from ambc.utils.exceptions import (
    ExitCode,
    InfeasibleError,
    IterationCapError,
    MonotonicityError,
    NumericalError,
)


class FailingTimeSolver(TimeAllocationService):
    """Succeeds for the first `healthy` calls, then reports a solver failure"""

    def __init__(self, metrics, healthy: int):
        super().__init__(metrics)
        self.healthy = healthy
        self.calls = 0

    def solve_time_allocation(self, grid, config, alpha_fix, power_fix):
        self.calls += 1
        if self.calls > self.healthy:
            return SubproblemResult(block='time', status=SolveStatus.NUMERICAL_FAILURE, message="forced")
        return super().solve_time_allocation(grid, config, alpha_fix, power_fix)


class TestOptimize:
    @pytest.mark.parametrize('seed', [1, 2, 3])
    def test_converges_monotonically(self, optimizer, channel_service, small_config, seed):
        grid = channel_service.realize(small_config, seed)
        trace = optimizer.optimize(grid, small_config)

        assert trace.termination_reason == TerminationReason.CONVERGED
        assert trace.converged
        assert 1 <= trace.num_iterations <= 200
        assert np.all(np.diff(trace.objectives) >= -1e-9)
        optimizer.require_monotone(trace)
        if trace.num_iterations > 1:
            assert abs(trace.objectives[-1] - trace.objectives[-2]) <= small_config.epsilon

        report = optimizer.metrics.check_feasibility(trace.final_state, grid, small_config)
        assert report.feasible
        assert min(report.residuals.values()) >= -1e-6

    def test_improves_on_feasible_start(self, optimizer, channel_service, small_config):
        grid = channel_service.realize(small_config, 5)
        config = small_config.updated(e_min=0.0)
        init = optimizer.default_init(grid, config)
        assert optimizer.metrics.check_feasibility(init, grid, config).feasible
        trace = optimizer.optimize(grid, config, init)
        assert trace.final_state.objective >= init.objective - 1e-9

    def test_iteration_records(self, optimizer, channel_service, small_config):
        grid = channel_service.realize(small_config, 4)
        trace = optimizer.optimize(grid, small_config)
        record = trace.iterations[0]
        assert record.index == 1
        assert set(record.block_status) == {'time', 'reflection', 'power'}
        assert all(status == 'optimal' for status in record.block_status.values())
        assert len(record.slot_power) == 2
        assert record.wall_time >= 0.0
        assert len(trace.subproblems) == 3 * trace.num_iterations

    def test_unreachable_lu_requirement(self, optimizer, channel_service, small_config):
        config = small_config.updated(d_req=100.0)
        trace = optimizer.optimize(channel_service.realize(config, 1), config)
        assert trace.termination_reason == TerminationReason.INFEASIBLE
        assert trace.num_iterations == 0

    def test_infeasible_energy_on_first_iteration(self, optimizer, channel_service, small_config):
        config = small_config.updated(e_min=1.0)
        trace = optimizer.optimize(channel_service.realize(config, 1), config)
        assert trace.termination_reason == TerminationReason.INFEASIBLE
        assert not trace.converged

    def test_iteration_cap(self, metrics, channel_service, small_config):
        config = small_config.updated(epsilon=1e-15)
        optimizer = BcdOptimizer(metrics, iteration_cap=1)
        trace = optimizer.optimize(channel_service.realize(config, 1), config)
        assert trace.termination_reason == TerminationReason.ITERATION_CAP
        assert trace.num_iterations == 1

    def test_late_block_failure_returns_incumbent(self, metrics, channel_service, small_config):
        grid = channel_service.realize(small_config, 3)
        optimizer = BcdOptimizer(metrics, time_solver=FailingTimeSolver(metrics, healthy=1), iteration_cap=50)
        config = small_config.updated(epsilon=1e-15)
        trace = optimizer.optimize(grid, config)
        assert trace.termination_reason == TerminationReason.NUMERICAL_FAILURE
        assert trace.num_iterations == 1
        assert trace.final_state.objective == pytest.approx(trace.objectives[-1])
        assert metrics.check_feasibility(trace.final_state, grid, config).feasible

    def test_first_block_failure_is_numerical(self, metrics, channel_service, small_config):
        optimizer = BcdOptimizer(metrics, time_solver=FailingTimeSolver(metrics, healthy=0))
        trace = optimizer.optimize(channel_service.realize(small_config, 3), small_config)
        assert trace.termination_reason == TerminationReason.NUMERICAL_FAILURE
        assert trace.num_iterations == 0


class TestRequireMonotone:
    def make_trace(self, objectives):
        records = [IterationRecord(index=i + 1, objective=q, tau=[], alpha=[], slot_power=[],
                                   block_status={}, block_objectives={}, wall_time=0.0)
                   for i, q in enumerate(objectives)]
        state = AllocationState(np.zeros(1), np.zeros(1), np.zeros((1, 1)))
        return SolveTrace(records, state, True, TerminationReason.CONVERGED)

    def test_accepts_non_decreasing(self, optimizer):
        optimizer.require_monotone(self.make_trace([0.1, 0.2, 0.2 - 1e-12, 0.3]))

    def test_rejects_decrease(self, optimizer):
        with pytest.raises(MonotonicityError):
            optimizer.require_monotone(self.make_trace([0.1, 0.3, 0.2]))


class TestReferenceRealizations:
    def test_power_solver_failure_does_not_end_the_run(self, optimizer, channel_service, reference_config):
        # this realization used to stop on a solver error in the power block
        grid = channel_service.realize(reference_config, 36)
        trace = optimizer.optimize(grid, reference_config)
        assert trace.termination_reason == TerminationReason.CONVERGED
        assert optimizer.metrics.check_feasibility(trace.final_state, grid, reference_config).feasible

    def test_energy_floor_met_exactly(self, optimizer, channel_service, reference_config):
        grid = channel_service.realize(reference_config, 8)
        trace = optimizer.optimize(grid, reference_config)
        energy = optimizer.metrics.harvested_energies(trace.final_state, grid, reference_config)
        assert np.all(energy >= reference_config.e_min_array * (1.0 - 1e-6))

    @pytest.mark.parametrize('seed', [1, 2])
    def test_rerun_from_fixed_point(self, optimizer, channel_service, small_config, seed):
        grid = channel_service.realize(small_config, seed)
        first = optimizer.optimize(grid, small_config)
        again = optimizer.optimize(grid, small_config, first.final_state)
        assert again.termination_reason == TerminationReason.CONVERGED
        assert again.num_iterations <= 2
        assert again.final_state.objective >= first.final_state.objective - 1e-9


class TestRequireConverged:
    def make_trace(self, reason):
        state = AllocationState(np.zeros(1), np.zeros(1), np.zeros((1, 1)))
        return SolveTrace([], state, reason == TerminationReason.CONVERGED, reason)

    def test_converged_passes(self, optimizer):
        optimizer.require_converged(self.make_trace(TerminationReason.CONVERGED))

    @pytest.mark.parametrize('reason, error, code', [
        (TerminationReason.INFEASIBLE, InfeasibleError, ExitCode.INFEASIBLE),
        (TerminationReason.ITERATION_CAP, IterationCapError, ExitCode.ITERATION_CAP),
        (TerminationReason.NUMERICAL_FAILURE, NumericalError, ExitCode.NUMERICAL),
        (TerminationReason.MONOTONICITY_VIOLATION, MonotonicityError, None),
    ])
    def test_abnormal_terminations_raise(self, optimizer, reason, error, code):
        with pytest.raises(error) as raised:
            optimizer.require_converged(self.make_trace(reason))
        if code is not None:
            assert raised.value.exit_code == code
        assert reason.value in str(raised.value)

    def test_unreachable_requirement_raises(self, optimizer, channel_service, small_config):
        config = small_config.updated(d_req=100.0)
        trace = optimizer.optimize(channel_service.realize(config, 1), config)
        with pytest.raises(InfeasibleError):
            optimizer.require_converged(trace)
