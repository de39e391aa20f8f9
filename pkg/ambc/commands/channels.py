from typing import Optional

from ambc.commands.common import config_echo, emit, resolve_seed, scenario_name
from ambc.repositories.results_repository import ResultsRepository
from ambc.repositories.scenario_repository import ScenarioRepository
from ambc.schemas.command import CommandSpec
from ambc.services.channel_model_service import ChannelModelService
from ambc.utils.exceptions import ExitCode


def run_dump_channels(cmd: CommandSpec,
                      scenarios: Optional[ScenarioRepository] = None,
                      channels: Optional[ChannelModelService] = None) -> int:
    scenarios = scenarios or ScenarioRepository()
    channels = channels or ChannelModelService()
    results = ResultsRepository(cmd.output_dir)

    config = scenarios.load_scenario(cmd.config_path, cmd.preset, cmd.overrides)
    seed = resolve_seed(cmd)
    taps = channels.sample_taps(config, seed)
    grid = channels.frequency_response(taps, config.num_subcarriers)

    run_dir = results.create_run(f"channels-{scenario_name(cmd)}-seed{seed}")
    results.write_json(run_dir, 'config.json', config_echo(cmd, config, seed))
    path = results.write_channels(run_dir, taps, grid)
    emit({
        'run_dir': str(run_dir),
        'channels': str(path),
        'noise_power': channels.noise_power(config),
        'num_bds': grid.num_bds,
        'num_subcarriers': grid.num_subcarriers,
    })
    return int(ExitCode.OK)
