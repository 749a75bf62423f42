"""Environment configuration."""

from __future__ import annotations

__all__ = ('deterministic', 'ENV_FILE', 'log_level', 'threads')

import logging
import os

from starlette.config import Config

logger = logging.getLogger(__name__)

ENV_FILE = '.env'


def _config() -> Config:
    return Config(ENV_FILE if os.path.isfile(ENV_FILE) else None)


def threads() -> int:
    """
    Upper bound on worker threads.

    :return: ``DISAGG_THREADS``, at least 1
    """
    value = _config()('DISAGG_THREADS', cast=int, default=1)
    if value < 1:
        logger.warning('DISAGG_THREADS=%d is not positive, using 1', value)
        return 1
    return value


def log_level() -> str:
    """
    Log level name used by the command line.

    :return: ``DISAGG_LOG_LEVEL``, upper-cased
    """
    return _config()('DISAGG_LOG_LEVEL', cast=str, default='WARNING').upper()


def deterministic() -> bool:
    """
    Default of the ``--deterministic`` flag.

    :return: ``DISAGG_DETERMINISTIC``
    """
    return _config()('DISAGG_DETERMINISTIC', cast=bool, default=False)
