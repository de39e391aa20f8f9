import logging
from typing import Optional

from ambc.commands.common import config_echo, emit, iteration_rows, resolve_seed, scenario_name
from ambc.config import Config
from ambc.models.allocation import SolveStatus, TerminationReason
from ambc.repositories.results_repository import ResultsRepository
from ambc.repositories.scenario_repository import ScenarioRepository
from ambc.schemas.command import CommandSpec
from ambc.services.bcd_optimizer_service import BcdOptimizer
from ambc.services.benchmark_service import BenchmarkService
from ambc.utils.exceptions import ExitCode

logger = logging.getLogger(__name__)


def run_bench(cmd: CommandSpec,
              scenarios: Optional[ScenarioRepository] = None,
              service: Optional[BenchmarkService] = None) -> int:
    """Joint design against equal allocation on one realization"""
    scenarios = scenarios or ScenarioRepository()
    service = service or BenchmarkService(optimizer=BcdOptimizer(iteration_cap=Config.ITERATION_CAP))
    results = ResultsRepository(cmd.output_dir)

    config = scenarios.load_scenario(cmd.config_path, cmd.preset, cmd.overrides)
    seed = resolve_seed(cmd)
    _, bench, trace = service.run_realization(config, seed, cmd.bench_full_budget)

    joint_q = trace.final_state.objective
    gain = None
    if bench.status == SolveStatus.OPTIMAL and trace.converged and bench.objective > 0:
        gain = joint_q / bench.objective - 1.0
    comparison = {
        'seed': seed,
        'benchmark': {
            'alpha_common': bench.alpha_common,
            'objective': bench.objective,
            'status': bench.status.value,
            'full_budget': cmd.bench_full_budget,
        },
        'joint': {
            'objective': joint_q,
            'termination': trace.termination_reason.value,
            'iterations': trace.num_iterations,
        },
        'gain': gain,
    }

    run_dir = results.create_run(f"bench-{scenario_name(cmd)}-seed{seed}")
    echo = config_echo(cmd, config, seed)
    results.write_json(run_dir, 'config.json', echo)
    results.write_json(run_dir, 'bench.json', comparison)
    results.write_summary(run_dir, {
        'title': f"bench {scenario_name(cmd)}",
        'echo': echo,
        'outcome': {'benchmark_q': bench.objective, 'joint_q': joint_q, 'gain': gain,
                    'termination': trace.termination_reason.value},
        'iterations': iteration_rows(trace),
        'aggregates': [],
    })
    emit({'run_dir': str(run_dir), **comparison})

    if trace.termination_reason == TerminationReason.CONVERGED and bench.status != SolveStatus.OPTIMAL:
        logger.warning("Benchmark infeasible while the joint design converged")
    service.optimizer.require_converged(trace)
    return int(ExitCode.OK)
