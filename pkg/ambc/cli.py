import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError as PydanticValidationError

from ambc import __version__
from ambc.commands.bench import run_bench
from ambc.commands.channels import run_dump_channels
from ambc.commands.solve import run_solve
from ambc.commands.sweep import run_sweep
from ambc.commands.validate import run_validate
from ambc.config import Config, setup_logging
from ambc.middleware.error_handlers import handle_errors
from ambc.schemas.command import CommandSpec
from ambc.utils.exceptions import ValidationError

logger = logging.getLogger(__name__)

COMMANDS = {
    'solve': run_solve,
    'sweep': run_sweep,
    'bench': run_bench,
    'validate': run_validate,
    'dump-channels': run_dump_channels,
}

HELP = {
    'solve': "optimize one channel realization",
    'sweep': "Monte Carlo sweep against the equal-allocation benchmark",
    'bench': "joint design versus benchmark on one realization",
    'validate': "check a saved allocation against every constraint",
    'dump-channels': "write the taps and subcarrier responses of one realization",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument('--config', type=Path, help="scenario file (KEY=value lines)")
    source.add_argument('--preset', help="shipped scenario, e.g. fig3 or fig4")
    common.add_argument('--seed', type=int, help="channel seed (base seed for sweeps)")
    common.add_argument('--out', type=Path, default=Config.OUTPUT_ROOT,
                        help="output root (default: $AMBC_OUTPUT_ROOT or ./runs)")
    common.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help="override one scenario key; repeatable")
    common.add_argument('-v', '--verbose', dest='verbosity', action='count', default=0,
                        help="-v: debug logs and per-iteration CSV, -vv: per-block CSV too")

    parser = argparse.ArgumentParser(prog='ambc', description="Max-min throughput design for full-duplex "
                                                              "ambient backscatter OFDM networks")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest='subcommand', required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name, parents=[common], help=HELP[name])
        if name == 'sweep':
            sub.add_argument('--jobs', type=int, default=Config.JOBS,
                             help="worker processes (default: $AMBC_JOBS or CPU count)")
        if name in ('sweep', 'bench'):
            sub.add_argument('--bench-full-budget', action='store_true',
                             help="benchmark uses P_bar/N per subcarrier instead of P_bar/(M N)")
        if name == 'validate':
            sub.add_argument('--state', dest='state_path', type=Path, required=True,
                             help="allocation JSON written by solve")
    return parser


def parse_command(argv: Optional[List[str]] = None) -> CommandSpec:
    args = build_parser().parse_args(argv)
    try:
        return CommandSpec(
            subcommand=args.subcommand,
            config_path=args.config,
            preset=args.preset,
            seed=args.seed,
            output_dir=args.out,
            verbosity=args.verbosity,
            overrides=args.overrides,
            jobs=getattr(args, 'jobs', 1),
            state_path=getattr(args, 'state_path', None),
            bench_full_budget=getattr(args, 'bench_full_budget', False),
        )
    except PydanticValidationError as e:
        first = e.errors()[0]
        raise ValidationError(f"{'.'.join(str(part) for part in first['loc'])}: {first['msg']}")


@handle_errors
def dispatch(argv: Optional[List[str]] = None) -> int:
    cmd = parse_command(argv)
    setup_logging(cmd.verbosity)
    logger.debug(f"Running {cmd.subcommand} with {cmd.model_dump(mode='json')}")
    return COMMANDS[cmd.subcommand](cmd)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        return dispatch(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)


if __name__ == '__main__':
    sys.exit(main())
