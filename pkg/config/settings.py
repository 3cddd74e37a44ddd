# config/settings.py
# Runtime settings: defaults, environment (.env), key=value config file, CLI flags

import logging
import os

from dotenv import load_dotenv, dotenv_values

load_dotenv()

ENV_PREFIX = 'HYPERPCA_'

DEFAULTS = {
    'workers': os.cpu_count() or 1,
    'mode': 'deterministic',
    'epsilon': 1e-10,
    'max_sweeps': 50,
    'seed': 1,
    'chunk': 16384,
    'precision': 'double',
    'log_level': 'WARNING',
}

# Keys a config file or the environment may set
SETTING_KEYS = tuple(DEFAULTS)


def _from_env():
    """Collect HYPERPCA_* variables that are present in the environment."""
    values = {}
    for key in SETTING_KEYS:
        raw = os.getenv(ENV_PREFIX + key.upper())
        if raw is not None and raw.strip() != '':
            values[key] = raw.strip()
    return values


def _from_config_file(config_path):
    """
    Parse a key=value config file.

    Keys may be written bare (`workers=4`) or with the env prefix
    (`HYPERPCA_WORKERS=4`). Unknown keys are rejected so typos surface early.
    """
    if not config_path:
        return {}
    if not os.path.isfile(config_path):
        raise FileNotFoundError(f"config file not found: {config_path}")

    values = {}
    for raw_key, raw_value in dotenv_values(config_path).items():
        key = raw_key.lower()
        if key.startswith(ENV_PREFIX.lower()):
            key = key[len(ENV_PREFIX):]
        if key not in SETTING_KEYS:
            raise ValueError(
                f"unknown key '{raw_key}' in {config_path}. "
                f"Known keys: {', '.join(SETTING_KEYS)}"
            )
        if raw_value is not None:
            values[key] = raw_value.strip()
    return values


def resolve_settings(cli_values=None, config_path=None):
    """
    Merge settings with precedence CLI > config file > env > defaults.

    Args:
        cli_values: dict of flag values; None entries mean "flag not given"
        config_path: optional key=value file

    Returns:
        dict with every key of DEFAULTS (values may still be strings;
        CliConfig does the type conversion and validation)
    """
    merged = dict(DEFAULTS)
    merged.update(_from_env())
    merged.update(_from_config_file(config_path))
    for key, value in (cli_values or {}).items():
        if value is not None:
            merged[key] = value
    return merged


def configure_logging(level='WARNING'):
    """Install one stream handler on the root logger."""
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        raise ValueError(f"unknown log level: {level}")
    logging.basicConfig(
        level=numeric,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        force=True,
    )
