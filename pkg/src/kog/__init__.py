"""Objects, groups and service discovery: parser, type checker, interpreter and runtime type harness."""
from .parser import parse, parse_file, pretty
from .typecheck import type_program
from .runtime import run, explore, initial_configuration, enabled, apply
from .rtcheck import check_config, canonical_env

__all__ = [
    "parse", "parse_file", "pretty", "type_program", "run", "explore",
    "initial_configuration", "enabled", "apply", "check_config", "canonical_env",
]
__version__ = "0.1.0"
