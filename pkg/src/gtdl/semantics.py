"""Small-step operational semantics of a single GTDL rule.

A configuration pairs the remaining block (or ``HALT``) with a store of
Boolean variables. Each step applies exactly one rule of :data:`SOS_RULES`;
assignments and branch selection are silent, setting a flag is observable and
leads to ``HALT``. A block consisting only of ``skip`` is identified with
``HALT``, so a non-detecting run simply completes.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

from ..lts import TAU, Label
from .ast import (
    Assign,
    BinaryCond,
    Block,
    BoolLiteral,
    BoolOp,
    Compare,
    CompareOp,
    Cond,
    FlagIsSet,
    GtdlRule,
    If,
    Not,
    PluginCall,
    SetFlag,
    Var,
)
from .errors import GtdlRuntimeError

logger = logging.getLogger(__name__)


class Halt:
    """The terminated command; it has no outgoing transitions."""

    def __repr__(self) -> str:
        return "HALT"


HALT = Halt()
Command = Union[Block, Halt]
Store = Dict[str, bool]


@dataclass(frozen=True)
class PluginValuation:
    """Values of plugin calls and of flags read through ``GlobalFlag.IsSet``."""

    plugins: Mapping[PluginCall, bool] = field(default_factory=dict)
    flags: Mapping[str, bool] = field(default_factory=dict)

    def plugin_value(self, call: PluginCall) -> bool:
        try:
            return self.plugins[call]
        except KeyError:
            raise GtdlRuntimeError(f"no value for plugin call {call}") from None

    def flag_value(self, flag: str) -> bool:
        try:
            return self.flags[flag]
        except KeyError:
            raise GtdlRuntimeError(f"no value for flag '{flag}'") from None

    def merged(self, other: "PluginValuation") -> "PluginValuation":
        """Combine two valuations; entries of ``other`` win."""
        return PluginValuation(
            plugins={**self.plugins, **other.plugins},
            flags={**self.flags, **other.flags},
        )


@dataclass(frozen=True)
class Configuration:
    command: Command
    store: Mapping[str, bool] = field(default_factory=dict)

    @property
    def is_halted(self) -> bool:
        return isinstance(self.command, Halt)


@dataclass(frozen=True)
class Step:
    rule: str
    label: Label
    target: Configuration


Guard = Callable[[Configuration, PluginValuation], bool]
Fire = Callable[[Configuration, PluginValuation], Step]


def evaluate(node: Cond, store: Mapping[str, bool]) -> bool:
    """Value of a condition or expression under ``store``.

    Raises:
        GtdlRuntimeError: If a variable is unbound.
    """
    if isinstance(node, BoolLiteral):
        return node.value
    if isinstance(node, Var):
        if node.name not in store:
            raise GtdlRuntimeError(f"variable '{node.name}' is unbound")
        return store[node.name]
    if isinstance(node, Not):
        return not evaluate(node.operand, store)
    if isinstance(node, BinaryCond):
        if node.op is BoolOp.AND:
            return evaluate(node.left, store) and evaluate(node.right, store)
        return evaluate(node.left, store) or evaluate(node.right, store)
    if isinstance(node, Compare):
        equal = evaluate(node.var, store) == evaluate(node.expr, store)
        return equal if node.op is CompareOp.EQ else not equal
    raise GtdlRuntimeError(f"cannot evaluate {node!r}")


def source_value(
    assign: Assign, store: Mapping[str, bool], valuation: PluginValuation
) -> bool:
    source = assign.source
    if isinstance(source, PluginCall):
        return valuation.plugin_value(source)
    if isinstance(source, FlagIsSet):
        return valuation.flag_value(source.flag)
    return evaluate(source, store)


def _normalise(block: Block) -> Command:
    return HALT if block.is_skip else block


def _rest(block: Block) -> Block:
    return Block(block.assigns[1:], block.stmt)


def _assign_step(name: str) -> Fire:
    def fire(config: Configuration, valuation: PluginValuation) -> Step:
        block = config.command
        assert isinstance(block, Block)
        assign = block.assigns[0]
        store = dict(config.store)
        store[assign.var] = source_value(assign, config.store, valuation)
        return Step(name, TAU, Configuration(_normalise(_rest(block)), store))

    return fire


def _branch_step(name: str, take_then: bool) -> Fire:
    def fire(config: Configuration, valuation: PluginValuation) -> Step:
        stmt = config.command.stmt  # type: ignore[union-attr]
        chosen = stmt.then_block if take_then else stmt.else_block
        return Step(name, TAU, Configuration(_normalise(chosen), config.store))

    return fire


def _detect(config: Configuration, valuation: PluginValuation) -> Step:
    stmt = config.command.stmt  # type: ignore[union-attr]
    label = Label.observable(stmt.flag)
    return Step("detect", label, Configuration(HALT, config.store))


def _leading_assign(
    config: Configuration, kind: Union[type, Tuple[type, ...]]
) -> bool:
    block = config.command
    return (
        isinstance(block, Block)
        and bool(block.assigns)
        and isinstance(block.assigns[0].source, kind)
    )


def _bare_stmt(config: Configuration, kind: type) -> bool:
    block = config.command
    if not isinstance(block, Block) or block.assigns:
        return False
    return isinstance(block.stmt, kind)


def _branch_guard(config: Configuration, outcome: bool) -> bool:
    if not _bare_stmt(config, If):
        return False
    cond = config.command.stmt.cond  # type: ignore[union-attr]
    return evaluate(cond, config.store) is outcome


@dataclass(frozen=True)
class SosRule:
    name: str
    applies: Guard
    fire: Fire


SOS_RULES = (
    SosRule(
        "assign-plugin",
        lambda c, v: _leading_assign(c, PluginCall),
        _assign_step("assign-plugin"),
    ),
    SosRule(
        "assign-flag",
        lambda c, v: _leading_assign(c, FlagIsSet),
        _assign_step("assign-flag"),
    ),
    SosRule(
        "assign-expr",
        lambda c, v: _leading_assign(c, (BoolLiteral, Var)),
        _assign_step("assign-expr"),
    ),
    SosRule(
        "if-true", lambda c, v: _branch_guard(c, True), _branch_step("if-true", True)
    ),
    SosRule(
        "if-false",
        lambda c, v: _branch_guard(c, False),
        _branch_step("if-false", False),
    ),
    SosRule("detect", lambda c, v: _bare_stmt(c, SetFlag), _detect),
)


def initial_configuration(rule: GtdlRule) -> Configuration:
    return Configuration(_normalise(rule.body), {})


def applicable_rules(config: Configuration, valuation: PluginValuation) -> List[str]:
    """Names of the SOS rules whose guards hold in ``config``."""
    return [rule.name for rule in SOS_RULES if rule.applies(config, valuation)]


def step(config: Configuration, valuation: PluginValuation) -> Step:
    """Perform one small step.

    Raises:
        GtdlRuntimeError: When stepping ``HALT`` or when the rule table is
            not deterministic for ``config``.
    """
    if config.is_halted:
        raise GtdlRuntimeError("cannot step halt: it has no outgoing transitions")
    matching = [rule for rule in SOS_RULES if rule.applies(config, valuation)]
    if len(matching) != 1:
        names = ", ".join(rule.name for rule in matching) or "none"
        raise GtdlRuntimeError(f"expected exactly one applicable rule, got {names}")
    return matching[0].fire(config, valuation)


def run(rule: GtdlRule, valuation: PluginValuation) -> List[Label]:
    """Labels of the complete SOS run of ``rule`` under ``valuation``."""
    config = initial_configuration(rule)
    labels: List[Label] = []
    while not config.is_halted:
        taken = step(config, valuation)
        labels.append(taken.label)
        config = taken.target
    return labels


def denote(rule: GtdlRule, valuation: PluginValuation) -> Optional[str]:
    """Big-step reading of ``rule``: the flag it sets, or None.

    Walks the block structure directly without building configurations.
    """
    store: Store = {}
    block = rule.body
    while True:
        for assign in block.assigns:
            store[assign.var] = source_value(assign, store, valuation)
        stmt = block.stmt
        if isinstance(stmt, SetFlag):
            return stmt.flag
        if isinstance(stmt, If):
            block = stmt.then_block if evaluate(stmt.cond, store) else stmt.else_block
            continue
        return None
