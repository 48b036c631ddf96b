import hashlib
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from errors import ConfigError

LOG_LEVEL_ENV = 'SMFG_LOG_LEVEL'

# SMFG_LOG_LEVEL accepts the short names used on the command line
_LEVEL_ALIASES = {
    'error': 'ERROR',
    'warn': 'WARNING',
    'warning': 'WARNING',
    'info': 'INFO',
    'debug': 'DEBUG',
}


def resolve_log_level(config_level='INFO'):
    """Pick the effective log level name.

    The ``SMFG_LOG_LEVEL`` environment variable wins over the configured level.

    Args:
        config_level: Level from the configuration file

    Returns:
        Upper-case logging level name
    """
    env_level = os.environ.get(LOG_LEVEL_ENV)
    level = env_level if env_level else config_level
    return _LEVEL_ALIASES.get(str(level).lower(), str(level).upper())


def setup_logging(log_level='INFO', log_file='logs/smfg-lab.log'):
    """Configure logging for the application.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Path to log file, or None for console only

    Returns:
        The ``smfg-lab`` logger
    """
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    numeric_level = getattr(logging, resolve_log_level(log_level), logging.INFO)

    handlers = [logging.StreamHandler(sys.stdout)]
    if log_file:
        # Create logs directory if it doesn't exist
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    # force=True so a second run in the same process (sweep) re-targets the file
    logging.basicConfig(
        level=numeric_level,
        format=log_format,
        datefmt=date_format,
        handlers=handlers,
        force=True,
    )

    return logging.getLogger('smfg-lab')


def ensure_directory(path):
    """Ensure directory exists, create if not.

    Args:
        path: Directory path (string or Path object)

    Returns:
        Path object
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def sha256_bytes(payload: bytes) -> str:
    """Hex SHA-256 digest of a byte string."""
    return hashlib.sha256(payload).hexdigest()


def sha256_file(file_path) -> str:
    """Calculate SHA-256 hash of a file, read in 4 KiB blocks."""
    sha256_hash = hashlib.sha256()
    with open(file_path, 'rb') as f:
        for byte_block in iter(lambda: f.read(4096), b''):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in ('true', 'yes', 'on', '1'):
        return True
    if isinstance(value, str) and value.strip().lower() in ('false', 'no', 'off', '0'):
        return False
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    raise ValueError(f"not a boolean: {value!r}")


def _as_int(value) -> int:
    if isinstance(value, bool):
        raise ValueError(f"not an integer: {value!r}")
    if isinstance(value, int):
        return value
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"not an integer: {value!r}")
    return int(number)


def build_dataclass(cls, values, section):
    """Instantiate a settings dataclass from a config section.

    Values are coerced to the type of each field's default; unknown keys and
    values that do not coerce raise ConfigError.

    Args:
        cls: Dataclass whose fields all have defaults
        values: Mapping from the YAML section (may be None)
        section: Section name used in error messages

    Returns:
        cls instance
    """
    values = dict(values or {})
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"Unknown {section} settings: {', '.join(unknown)}")

    kwargs = {}
    for name, value in values.items():
        default = known[name].default
        try:
            if isinstance(default, bool):
                kwargs[name] = _as_bool(value)
            elif isinstance(default, int):
                kwargs[name] = _as_int(value)
            elif isinstance(default, float):
                kwargs[name] = float(value)
            elif isinstance(default, tuple):
                kwargs[name] = tuple(_as_int(v) for v in value)
            else:
                kwargs[name] = value
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{name} has an invalid value: {value!r}")
    return cls(**kwargs)
