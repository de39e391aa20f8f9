import json
import sys
from typing import Any, Dict, List, Optional

from ambc.models.allocation import SolveTrace
from ambc.schemas.command import CommandSpec
from ambc.schemas.scenario import ScenarioConfig

DEFAULT_SEED = 0


def resolve_seed(cmd: CommandSpec, fallback: Optional[int] = None) -> int:
    if cmd.seed is not None:
        return cmd.seed
    return DEFAULT_SEED if fallback is None else fallback


def scenario_name(cmd: CommandSpec) -> str:
    if cmd.config_path is not None:
        return cmd.config_path.stem
    return cmd.preset or 'default'


def config_echo(cmd: CommandSpec, config: ScenarioConfig, seed: int) -> Dict[str, Any]:
    """Resolved parameters written next to every result"""
    return {
        'command': cmd.subcommand,
        'scenario': scenario_name(cmd),
        'seed': seed,
        'overrides': cmd.overrides,
        'parameters': config.echo(),
    }


def iteration_rows(trace: SolveTrace) -> List[Dict[str, Any]]:
    return [{
        'index': record.index,
        'objective': record.objective,
        'tau': ', '.join(f"{value:.4g}" for value in record.tau),
        'alpha': ', '.join(f"{value:.4g}" for value in record.alpha),
        'wall_time': record.wall_time,
    } for record in trace.iterations]


def emit(data: Any):
    """Write one JSON document to stdout"""
    json.dump(data, sys.stdout, indent=2)
    sys.stdout.write('\n')
    sys.stdout.flush()
