import logging
from typing import Optional

import pandas as pd

from ambc.commands.common import config_echo, emit, iteration_rows, resolve_seed, scenario_name
from ambc.config import Config
from ambc.repositories.results_repository import ResultsRepository
from ambc.repositories.scenario_repository import ScenarioRepository
from ambc.schemas.command import CommandSpec
from ambc.schemas.report import SolveTraceSchema
from ambc.services.bcd_optimizer_service import BcdOptimizer
from ambc.utils.exceptions import ExitCode

logger = logging.getLogger(__name__)


def run_solve(cmd: CommandSpec,
              scenarios: Optional[ScenarioRepository] = None,
              optimizer: Optional[BcdOptimizer] = None) -> int:
    """One channel realization through the joint design"""
    scenarios = scenarios or ScenarioRepository()
    optimizer = optimizer or BcdOptimizer(iteration_cap=Config.ITERATION_CAP)
    results = ResultsRepository(cmd.output_dir)

    config = scenarios.load_scenario(cmd.config_path, cmd.preset, cmd.overrides)
    seed = resolve_seed(cmd)
    grid = optimizer.metrics.channel_service.realize(config, seed)
    trace = optimizer.optimize(grid, config)
    report = optimizer.metrics.check_feasibility(trace.final_state, grid, config)

    run_dir = results.create_run(f"solve-{scenario_name(cmd)}-seed{seed}")
    echo = config_echo(cmd, config, seed)
    results.write_json(run_dir, 'config.json', echo)
    results.write_json(run_dir, 'trace.json', SolveTraceSchema.from_trace(trace, seed).model_dump(mode='json'))
    results.write_state_csv(run_dir, trace.final_state)
    results.save_state(run_dir / 'final_state.json', trace.final_state, seed)
    if cmd.verbosity >= 1:
        results.write_frame(run_dir, 'iterations.csv', pd.DataFrame(iteration_rows(trace)))
    if cmd.verbosity >= 2:
        results.write_frame(run_dir, 'subproblems.csv', pd.DataFrame([{
            'block': result.block,
            'status': result.status.value,
            'objective': result.objective,
            'iterations': result.iterations,
            'max_residual': result.max_residual,
            'degenerate': result.degenerate,
            'solver': result.solver,
        } for result in trace.subproblems]))

    outcome = {
        'termination': trace.termination_reason.value,
        'converged': trace.converged,
        'objective': trace.final_state.objective,
        'iterations': trace.num_iterations,
        'feasible': report.feasible,
        'lu_throughput': report.lu_throughput,
    }
    results.write_summary(run_dir, {
        'title': f"solve {scenario_name(cmd)}",
        'echo': echo,
        'outcome': outcome,
        'iterations': iteration_rows(trace),
        'aggregates': [],
    })
    logger.info(f"Q={trace.final_state.objective:.6g} after {trace.num_iterations} iteration(s), "
                f"{trace.termination_reason.value}")
    emit({'run_dir': str(run_dir), **outcome})
    optimizer.require_converged(trace)
    return int(ExitCode.OK)
