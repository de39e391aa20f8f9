import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ambc.models.allocation import AllocationState, SolveStatus, SolveTrace, TerminationReason
from ambc.models.channel import FrequencyGrid
from ambc.models.experiment import BenchmarkResult, ExperimentRecord
from ambc.schemas.scenario import ScenarioConfig
from ambc.schemas.sweep import SweepSpec
from ambc.services.bcd_optimizer_service import BcdOptimizer
from ambc.services.channel_model_service import ChannelModelService
from ambc.services.network_metrics_service import NetworkMetricsService
from ambc.services.reflection_service import ReflectionService
from ambc.utils.exceptions import AmbcError
from ambc.utils.validators import Validators

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ['sweep_var', 'value', 'seed', 'joint_q', 'bench_q', 'iters', 'joint_feasible', 'bench_feasible']
AGGREGATE_COLUMNS = ['value', 'mean_joint_q', 'mean_bench_q', 'n_feasible']


def derive_seed(base_seed: int, value_index: int, realization: int, paired: bool = False) -> int:
    """Stable 64-bit seed of one realization

    Paired seeding drops the value index so every sweep point sees the same channels.
    """
    entropy = [Validators.normalize_seed(base_seed), realization] if paired \
        else [Validators.normalize_seed(base_seed), value_index, realization]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


class BenchmarkService:
    """Equal allocation benchmark and Monte Carlo sweeps against the joint design"""

    def __init__(self,
                 metrics: Optional[NetworkMetricsService] = None,
                 optimizer: Optional[BcdOptimizer] = None,
                 channel_service: Optional[ChannelModelService] = None,
                 tolerance: float = 1e-9):
        """Dependency Injection"""
        self.metrics = metrics or NetworkMetricsService()
        self.optimizer = optimizer or BcdOptimizer(self.metrics)
        self.channel_service = channel_service or self.metrics.channel_service
        self.reflection = ReflectionService(self.metrics)
        self.tolerance = tolerance

    def benchmark_state(self, grid: FrequencyGrid, config: ScenarioConfig, alpha_common: float,
                        full_budget: bool = False) -> AllocationState:
        count, subcarriers = grid.num_bds, grid.num_subcarriers
        level = config.p_bar / subcarriers if full_budget else config.p_ave
        state = AllocationState(
            tau=np.full(count, 1.0 / count),
            alpha=np.full(count, alpha_common),
            power=np.full((count, subcarriers), min(level, config.p_peak)),
        )
        return self.metrics.evaluate(state, grid, config)

    def solve_benchmark(self, grid: FrequencyGrid, config: ScenarioConfig,
                        full_budget: bool = False) -> BenchmarkResult:
        """Largest common alpha meeting the LU and energy constraints

        The min throughput grows with alpha while both constraint sets shrink,
        so the optimum sits on the feasibility boundary.
        """
        base = self.benchmark_state(grid, config, 0.0, full_budget)

        def feasible(alpha: float) -> bool:
            return self.reflection.constraints_hold(np.full(grid.num_bds, alpha), grid, config,
                                                    base.tau, base.power)

        if not feasible(0.0):
            logger.debug("Benchmark infeasible without reflection")
            return BenchmarkResult(alpha_common=0.0, objective=0.0, status=SolveStatus.INFEASIBLE)

        iterations = 0
        if feasible(1.0):
            alpha = 1.0
        else:
            low, high = 0.0, 1.0
            while high - low > self.tolerance:
                middle = 0.5 * (low + high)
                if feasible(middle):
                    low = middle
                else:
                    high = middle
                iterations += 1
            alpha = low

        state = self.benchmark_state(grid, config, alpha, full_budget)
        return BenchmarkResult(alpha_common=alpha, objective=state.objective, status=SolveStatus.OPTIMAL,
                               state=state, iterations=iterations)

    def run_realization(self, config: ScenarioConfig, seed: int, full_budget: bool = False,
                        from_benchmark: bool = False) -> Tuple[FrequencyGrid, BenchmarkResult, SolveTrace]:
        """Benchmark and joint design on one channel draw

        The joint design starts from default_init. With from_benchmark it starts
        from the benchmark point instead, when that point is feasible, and can
        then only improve on it.
        """
        grid = self.channel_service.realize(config, seed)
        bench = self.solve_benchmark(grid, config, full_budget)
        init = bench.state if from_benchmark and bench.status == SolveStatus.OPTIMAL else None
        trace = self.optimizer.optimize(grid, config, init)
        return grid, bench, trace

    def record(self, spec: SweepSpec, family: str, config: ScenarioConfig, value: float,
               value_index: int, realization: int) -> ExperimentRecord:
        seed = derive_seed(spec.base_seed, value_index, realization, spec.paired_seeds)
        try:
            grid, bench, trace = self.run_realization(config, seed, spec.bench_full_budget)
        except AmbcError as e:
            logger.warning(f"Realization {realization} at {spec.sweep_var}={value:g} failed: {e.message}")
            return ExperimentRecord(scenario_id=spec.scenario_id, family=family, sweep_var=spec.sweep_var,
                                    value=value, value_index=value_index, realization=realization, seed=seed,
                                    joint_q=None, bench_q=None, iterations=0, joint_feasible=False,
                                    bench_feasible=False, termination=type(e).__name__)

        joint_feasible = trace.converged or (
            trace.termination_reason == TerminationReason.ITERATION_CAP
            and self.metrics.check_feasibility(trace.final_state, grid, config).feasible)
        bench_feasible = bench.status == SolveStatus.OPTIMAL
        return ExperimentRecord(
            scenario_id=spec.scenario_id,
            family=family,
            sweep_var=spec.sweep_var,
            value=value,
            value_index=value_index,
            realization=realization,
            seed=seed,
            joint_q=trace.final_state.objective if joint_feasible else None,
            bench_q=bench.objective if bench_feasible else None,
            iterations=trace.num_iterations,
            joint_feasible=joint_feasible,
            bench_feasible=bench_feasible,
            termination=trace.termination_reason.value,
        )

    def run_sweep(self, spec: SweepSpec, family: str = '', config: Optional[ScenarioConfig] = None,
                  jobs: int = 1) -> List[ExperimentRecord]:
        """All (value, realization) pairs of one curve, ordered by value then realization"""
        config = config or spec.base
        Validators.require_non_empty('sweep values', spec.values)
        tasks = [(spec, family, spec.config_for(config, value), value, index, realization)
                 for index, value in enumerate(spec.values)
                 for realization in range(spec.realizations)]
        curve = f"{spec.scenario_id}/{family}" if family else spec.scenario_id
        logger.info(f"Sweep {curve}: {len(spec.values)} values x {spec.realizations} realizations "
                    f"on {jobs} worker(s)")

        if jobs <= 1:
            records = [self.record(*task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                # map preserves submission order
                items = [(self.optimizer.iteration_cap, task) for task in tasks]
                records = list(pool.map(_record_worker, items, chunksize=max(1, len(items) // (4 * jobs))))

        frame = self.to_frame(records)
        for value, group in frame.groupby('value', sort=False):
            logger.info(f"{spec.sweep_var}={value:g}: mean iterations {group['iters'].mean():.1f}, "
                        f"{int(group['joint_feasible'].sum())}/{len(group)} joint feasible")
        return records

    @staticmethod
    def to_frame(records: List[ExperimentRecord]) -> pd.DataFrame:
        rows = [{
            'sweep_var': record.sweep_var,
            'value': record.value,
            'seed': record.seed,
            'joint_q': record.joint_q,
            'bench_q': record.bench_q,
            'iters': record.iterations,
            'joint_feasible': record.joint_feasible,
            'bench_feasible': record.bench_feasible,
        } for record in records]
        return pd.DataFrame(rows, columns=RECORD_COLUMNS)

    @staticmethod
    def aggregate(records: List[ExperimentRecord]) -> pd.DataFrame:
        """Per-value means over feasible runs and the feasible-run count"""
        frame = BenchmarkService.to_frame(records)
        rows = []
        for value, group in frame.groupby('value', sort=False):
            joint = group.loc[group['joint_feasible'], 'joint_q'].astype(float)
            bench = group.loc[group['bench_feasible'], 'bench_q'].astype(float)
            rows.append({
                'value': value,
                'mean_joint_q': joint.mean() if len(joint) else np.nan,
                'mean_bench_q': bench.mean() if len(bench) else np.nan,
                'n_feasible': int(group['joint_feasible'].sum()),
            })
        return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)


def _record_worker(item) -> ExperimentRecord:
    """Process-pool entry point; each worker builds its own services"""
    iteration_cap, task = item
    return BenchmarkService(optimizer=BcdOptimizer(iteration_cap=iteration_cap)).record(*task)
