import logging
from collections import Counter
from typing import Optional

from ambc.commands.common import emit
from ambc.config import Config
from ambc.repositories.results_repository import ResultsRepository
from ambc.repositories.scenario_repository import ScenarioRepository
from ambc.schemas.command import CommandSpec
from ambc.services.bcd_optimizer_service import BcdOptimizer
from ambc.services.benchmark_service import BenchmarkService
from ambc.utils.exceptions import ExitCode

logger = logging.getLogger(__name__)


def run_sweep(cmd: CommandSpec,
              scenarios: Optional[ScenarioRepository] = None,
              service: Optional[BenchmarkService] = None) -> int:
    """Monte Carlo sweep of every curve family; per-run failures land in the records"""
    scenarios = scenarios or ScenarioRepository()
    service = service or BenchmarkService(optimizer=BcdOptimizer(iteration_cap=Config.ITERATION_CAP))
    results = ResultsRepository(cmd.output_dir)

    spec = scenarios.load_sweep(cmd.config_path, cmd.preset, cmd.overrides)
    updates = {}
    if cmd.seed is not None:
        updates['base_seed'] = cmd.seed
    if cmd.bench_full_budget:
        updates['bench_full_budget'] = True
    if updates:
        spec = spec.model_copy(update=updates)

    run_dir = results.create_run(f"sweep-{spec.scenario_id}-seed{spec.base_seed}")
    results.write_json(run_dir, 'sweep.json', {
        'command': cmd.subcommand,
        'overrides': cmd.overrides,
        'spec': spec.model_dump(mode='json', by_alias=True),
    })

    curves, aggregates = [], []
    for family, config in spec.family_configs():
        records = service.run_sweep(spec, family, config, jobs=cmd.jobs)
        target = run_dir / family if family else run_dir
        aggregate = service.aggregate(records)
        results.write_frame(target, 'records.csv', service.to_frame(records))
        results.write_frame(target, 'aggregate.csv', aggregate)
        curves.append({
            'family': family,
            'records': str(target / 'records.csv'),
            'aggregate': str(target / 'aggregate.csv'),
            'runs': len(records),
            'joint_feasible': sum(record.joint_feasible for record in records),
            'terminations': dict(Counter(record.termination for record in records)),
        })
        aggregates.extend({'family': family or '-', **row} for row in aggregate.to_dict('records'))

    results.write_summary(run_dir, {
        'title': f"sweep {spec.scenario_id} over {spec.sweep_var}",
        'echo': {'seed': spec.base_seed, 'realizations': spec.realizations,
                 'values': spec.values, 'parameters': spec.base.echo()},
        'outcome': {'curves': len(curves), 'paired_seeds': spec.paired_seeds,
                    'bench_full_budget': spec.bench_full_budget},
        'iterations': [],
        'aggregates': aggregates,
    })
    emit({'run_dir': str(run_dir), 'sweep_var': spec.sweep_var, 'curves': curves})
    return int(ExitCode.OK)
