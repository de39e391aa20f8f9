import logging
from typing import Optional

from ambc.commands.common import emit, resolve_seed
from ambc.repositories.results_repository import ResultsRepository
from ambc.repositories.scenario_repository import ScenarioRepository
from ambc.schemas.command import CommandSpec
from ambc.services.network_metrics_service import NetworkMetricsService
from ambc.utils.exceptions import ConfigError, ExitCode

logger = logging.getLogger(__name__)


def run_validate(cmd: CommandSpec,
                 scenarios: Optional[ScenarioRepository] = None,
                 metrics: Optional[NetworkMetricsService] = None) -> int:
    """Check a saved allocation against every constraint; exit 0 iff feasible"""
    if cmd.state_path is None:
        raise ConfigError("validate needs --state pointing at a saved allocation")
    scenarios = scenarios or ScenarioRepository()
    metrics = metrics or NetworkMetricsService()

    config = scenarios.load_scenario(cmd.config_path, cmd.preset, cmd.overrides)
    saved = ResultsRepository(cmd.output_dir).load_state(cmd.state_path)
    seed = resolve_seed(cmd, saved.seed)
    grid = metrics.channel_service.realize(config, seed)

    report = metrics.check_feasibility(saved.to_state(), grid, config)
    emit(report.model_dump(mode='json'))
    if not report.feasible:
        logger.info(f"Allocation violates: {', '.join(report.violated)}")
        return int(ExitCode.INFEASIBLE)
    return int(ExitCode.OK)
