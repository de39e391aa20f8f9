import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Process-level settings for the solver and the CLI"""

    # Output
    OUTPUT_ROOT = Path(os.environ.get('AMBC_OUTPUT_ROOT', 'runs'))

    # Worker pool for Monte Carlo realizations
    JOBS = int(os.environ.get('AMBC_JOBS', os.cpu_count() or 1))

    # Logging
    LOG_LEVEL = os.environ.get('AMBC_LOG_LEVEL', 'INFO').upper()
    LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # Optimizer
    ITERATION_CAP = int(os.environ.get('AMBC_ITERATION_CAP', 200))
    MONOTONE_SLACK = 1e-9
    FEASIBILITY_TOL = 1e-6
    BISECTION_TOL = 1e-12

    # cvxpy solver for the power block (empty = let cvxpy choose)
    SOLVER = os.environ.get('AMBC_SOLVER', '') or None

    # Presets shipped with the package
    PRESETS_DIR = Path(__file__).resolve().parent / 'presets'
    TEMPLATES_DIR = Path(__file__).resolve().parent / 'templates'


def setup_logging(verbosity: int = 0):
    """Route all log records to stderr; stdout is reserved for data"""
    level = logging.DEBUG if verbosity > 0 else getattr(logging, Config.LOG_LEVEL, logging.INFO)
    logging.basicConfig(
        level=level,
        format=Config.LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
    # cvxpy is chatty at DEBUG
    logging.getLogger('cvxpy').setLevel(max(level, logging.WARNING))
