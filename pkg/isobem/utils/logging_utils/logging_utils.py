import sys
from pathlib import Path

from loguru import logger as loguru_logger

DEFAULT_LEVEL = "INFO"
DEFAULT_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<cyan>{extra[name]}</cyan> - <level>{message}</level>"
)

# Default log directory and file
DEFAULT_LOG_DIR = Path("~/.isobem/logs").expanduser()
DEFAULT_LOG_FILE = "isobem.log"

_configured_sinks: dict[str, int] = {}


def is_logger_configured(logger_instance=None, path=None):
    """
    Checks if isobem sinks are installed
    with a path: checks that this particular file sink is installed
    """
    if path is not None:
        return str(Path(path).expanduser()) in _configured_sinks
    return "stderr" in _configured_sinks


def configure_logger(level=DEFAULT_LEVEL, log_file=None, logger_instance=None):
    """
    Install a stderr sink at the given level and optionally a rotating file sink.
    Calling again replaces the isobem sinks (not sinks installed by somebody else).
    """
    logger_instance = logger_instance or loguru_logger
    for sink_id in _configured_sinks.values():
        try:
            logger_instance.remove(sink_id)
        except ValueError:
            pass
    _configured_sinks.clear()

    logger_instance.configure(extra={"name": "isobem"})
    _configured_sinks["stderr"] = logger_instance.add(
        sys.stderr, level=level.upper(), format=DEFAULT_FORMAT
    )
    if log_file:
        path = Path(log_file).expanduser()
        path.parent.mkdir(parents=True, exist_ok=True)
        _configured_sinks[str(path)] = logger_instance.add(
            path, level="DEBUG", rotation="10 MB", enqueue=True
        )
    return logger_instance


def get_logger(name=None):
    """Module logger: the loguru logger bound with the module name."""
    return loguru_logger.bind(name=name or "isobem")
