import functools
import logging
import sys
from typing import Callable

from ambc.utils.exceptions import AmbcError, ExitCode, StorageError

logger = logging.getLogger(__name__)


def handle_errors(command: Callable[..., int]) -> Callable[..., int]:
    """Turn exceptions escaping a command into an exit code and one stderr line"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            return int(command(*args, **kwargs))
        except AmbcError as e:
            logger.debug("Command failed", exc_info=True)
            _report(type(e).__name__, e.message)
            return int(e.exit_code)
        except OSError as e:
            error = StorageError(f"{e.filename or ''}: {e.strerror or e}".lstrip(': '))
            _report(type(error).__name__, error.message)
            return int(error.exit_code)
        except KeyboardInterrupt:
            _report('Interrupted', 'stopped by user')
            return 130
        except Exception as e:
            logger.exception("Unexpected error")
            _report('InternalError', str(e) or type(e).__name__)
            return int(ExitCode.INTERNAL)

    return wrapper


def _report(kind: str, message: str):
    print(f"error: {kind}: {message}", file=sys.stderr)
