# config/__init__.py
from .settings import resolve_settings, configure_logging, DEFAULTS
