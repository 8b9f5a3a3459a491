"""GTDL detection rules: parsing, operational semantics and LTS compilation."""

from .ast import GtdlRule, PluginCall
from .compiler import (
    EngineWiring,
    InputUniverse,
    engine_to_lts,
    rule_inputs,
    rule_to_lts,
)
from .errors import GtdlCompileError, GtdlRuntimeError, GtdlSyntaxError, GtdlWiringError
from .parser import load_gtdl, parse_gtdl
from .semantics import (
    HALT,
    Configuration,
    PluginValuation,
    applicable_rules,
    denote,
    evaluate,
    initial_configuration,
    run,
    step,
)

__all__ = [
    "HALT",
    "Configuration",
    "EngineWiring",
    "GtdlCompileError",
    "GtdlRule",
    "GtdlRuntimeError",
    "GtdlSyntaxError",
    "GtdlWiringError",
    "InputUniverse",
    "PluginCall",
    "PluginValuation",
    "applicable_rules",
    "denote",
    "engine_to_lts",
    "evaluate",
    "initial_configuration",
    "load_gtdl",
    "parse_gtdl",
    "rule_inputs",
    "rule_to_lts",
    "run",
    "step",
]
