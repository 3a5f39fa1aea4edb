import os
import sys
import logging
import logging.handlers

from ksgroove.config import LOG_FILE, LOG_FILE_NAME, LOG_LEVEL

LOGGER_NAME = 'ksgroove'

LOG_FORMAT = '[%(asctime)s] %(levelname)s: %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# Rotate the run log at 64 MiB, keeping a few generations
MAX_LOG_BYTES = 64 * 1024 ** 2
LOG_BACKUPS = 4


def get_logger(name: str = LOGGER_NAME) -> logging.Logger:
    """
    Get a handle to the package logger, or to one of its children when
    @name is dotted below it.
    """
    return logging.getLogger(name)


logger = get_logger()
formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))

_stderr_handler = logging.StreamHandler(sys.stderr)
_stderr_handler.setFormatter(formatter)
logger.addHandler(_stderr_handler)


def add_file_handler(log_file: str = LOG_FILE) -> logging.Handler:
    """
    Also log to the rotating file @log_file, reusing a handler already writing there.
    Commands reach this through log_to_output_dir.
    """
    target = os.path.abspath(log_file)
    for handler in logger.handlers:
        if isinstance(handler, logging.handlers.RotatingFileHandler) and handler.baseFilename == target:
            return handler
    os.makedirs(os.path.dirname(target), exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(target, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS)
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    return handler


def log_to_output_dir(output_dir: str) -> logging.Handler:
    """
    Attach the run log inside @output_dir. Commands call this only once their
    configuration or arguments have been accepted.
    """
    return add_file_handler(os.path.join(output_dir, LOG_FILE_NAME))


def log_uncaught(exc_type, value, traceback):
    """
    sys.excepthook replacement: uncaught exceptions go to the run log.
    """
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, value, traceback)
        return
    logger.critical(f'Uncaught {exc_type.__name__}: {value}', exc_info=(exc_type, value, traceback))


sys.excepthook = log_uncaught
