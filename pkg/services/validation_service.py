# services/validation_service.py
# Validate merged CLI settings with pydantic before any computation runs

from pydantic import ValidationError

from models.cli_config import CliConfig


def validate_cli_config(data):
    """
    Validate settings merged from defaults, env, config file and flags.

    Returns:
        {'valid': bool, 'errors': ["field: message", ...], 'data': dict or None}
    """
    try:
        validated = CliConfig(**data)
        return {
            'valid': True,
            'errors': [],
            'data': validated.model_dump(),
        }
    except ValidationError as e:
        errors = []
        for error in e.errors():
            field = '.'.join(str(x) for x in error['loc']) or 'settings'
            errors.append(f"{field}: {error['msg']}")
        return {
            'valid': False,
            'errors': errors,
            'data': None,
        }
