"""LNT source emission for attack trees and GTDL rules.

The output is plain text for manual cross-checking with an external LNT
toolbox; nothing here parses or runs LNT.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .attack_tree import AttackTree, NodeKind
from .gtdl.ast import (
    Assign,
    BinaryCond,
    Block,
    BoolLiteral,
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
from .gtdl.compiler import EngineWiring

logger = logging.getLogger(__name__)

FLAG_CHANNEL = "FLAG_CHANNEL"
PREAMBLE = f"channel {FLAG_CHANNEL} is (Bool) end channel"
INDENT = "   "

_INVALID_CHARS = re.compile(r"[^A-Za-z0-9_]+")


@dataclass(frozen=True)
class LntDocument:
    text: str
    process_names: Tuple[str, ...]


def lnt_identifier(name: str) -> str:
    """Sanitise ``name`` into an LNT identifier."""
    identifier = _INVALID_CHARS.sub("_", name).strip("_")
    if not identifier or not identifier[0].isalpha():
        identifier = f"X_{identifier}"
    return identifier


def _indent(lines: Sequence[str], depth: int = 1) -> List[str]:
    return [INDENT * depth + line for line in lines]


def _process(header: str, body: Sequence[str]) -> str:
    return "\n".join([f"{header} is", *_indent(body), "end process"])


def _module(name: str, processes: Mapping[str, str]) -> LntDocument:
    parts = [f"module {name} is", PREAMBLE, *processes.values(), "end module"]
    return LntDocument("\n\n".join(parts) + "\n", tuple(processes))


# attack trees


def _emit_node(
    node: AttackTree, path: str, processes: Dict[str, str], name: Optional[str] = None
) -> str:
    if node.is_leaf:
        gate = lnt_identifier(node.action or "")
        process = f"LEAF_{gate}"
        if process not in processes:
            processes[process] = _process(f"process {process} [{gate}: any]", [gate])
        return f"{process} [{gate}]"

    calls = [
        _emit_node(child, f"{path}_{position}", processes)
        for position, child in enumerate(node.children, start=1)
    ]
    process = name or f"{node.kind.value.upper()}_{path}"
    if node.kind is NodeKind.SAND:
        body = [f"{call};" for call in calls[:-1]] + [calls[-1]]
    else:
        opener, separator, closer = {
            NodeKind.OR: ("select", "[]", "end select"),
            NodeKind.AND: ("par", "||", "end par"),
        }[node.kind]
        body = [opener]
        for position, call in enumerate(calls):
            if position:
                body.append(separator)
            body.extend(_indent([call]))
        body.append(closer)
    processes[process] = _process(f"process {process}", body)
    return process


def emit_tree(tree: AttackTree, module: Optional[str] = None) -> LntDocument:
    """Emit one process per tree node, children before parents.

    Leaves become ``process LEAF_a [a: any] is a end process``. Inner nodes
    are named after their kind and 1-based child path (``AND_root_1``); the
    root takes the tree's name when it has one.
    """
    processes: Dict[str, str] = {}
    root_name = lnt_identifier(tree.name) if tree.name and not tree.is_leaf else None
    reference = _emit_node(tree, "root", processes, name=root_name)
    module_name = lnt_identifier(module or tree.name or reference.split(" ")[0])
    document = _module(module_name, processes)
    logger.debug(f"Emitted {len(document.process_names)} tree processes")
    return document


# GTDL rules


def _cond(node: Cond, parent: Optional[str] = None) -> str:
    if isinstance(node, BoolLiteral):
        return "true" if node.value else "false"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Not):
        operand = node.operand
        inner = _cond(operand, "not")
        if isinstance(operand, (BinaryCond, Compare)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(node, Compare):
        op = "==" if node.op is CompareOp.EQ else "<>"
        return f"{node.var.name} {op} {_cond(node.expr)}"
    op = node.op.value.lower()
    text = f"{_cond(node.left, op)} {op} {_cond(node.right, op)}"
    return f"({text})" if parent in ("and", "or") and parent != op else text


class _RuleEmitter:
    def __init__(self, rule: GtdlRule, channels: Mapping[str, str]) -> None:
        self.rule = rule
        self.channels = channels

    def gate(self, flag: str) -> str:
        return lnt_identifier(self.channels.get(flag, flag))

    def gates(self) -> List[str]:
        gates: List[str] = []
        for flag in self.rule.flag_reads() + self.rule.flags_set():
            gate = self.gate(flag)
            if gate not in gates:
                gates.append(gate)
        return gates

    def parameters(self) -> List[str]:
        """Variables assigned from plugin calls, in source order."""
        names: List[str] = []
        for assign in self.rule.assigns():
            if isinstance(assign.source, PluginCall) and assign.var not in names:
                names.append(assign.var)
        return names

    def locals(self) -> List[str]:
        parameters = set(self.parameters())
        names: List[str] = []
        for assign in self.rule.assigns():
            if assign.var not in parameters and assign.var not in names:
                names.append(assign.var)
        return names

    def header(self) -> str:
        name = lnt_identifier(self.rule.name)
        header = f"process {name}"
        gates = self.gates()
        if gates:
            header += f" [{', '.join(gates)}: {FLAG_CHANNEL}]"
        parameters = self.parameters()
        if parameters:
            header += " (" + ", ".join(f"in var {p}: Bool" for p in parameters) + ")"
        return header

    def assign(self, assign: Assign) -> List[str]:
        if isinstance(assign.source, PluginCall):
            return []
        if isinstance(assign.source, FlagIsSet):
            return [f"{self.gate(assign.source.flag)} (?{assign.var})"]
        return [f"{assign.var} := {_cond(assign.source)}"]

    def block(self, block: Block) -> List[str]:
        statements = [lines for lines in map(self.assign, block.assigns) if lines]
        statements.append(self.stmt(block.stmt))
        lines: List[str] = []
        for position, statement in enumerate(statements):
            if position < len(statements) - 1:
                statement = statement[:-1] + [statement[-1] + ";"]
            lines.extend(statement)
        return lines

    def stmt(self, stmt: object) -> List[str]:
        if isinstance(stmt, SetFlag):
            return [f"{self.gate(stmt.flag)} (TRUE)"]
        if isinstance(stmt, If):
            lines = [
                f"if {_cond(stmt.cond)} then",
                *_indent(self.block(stmt.then_block)),
            ]
            if not stmt.else_block.is_skip:
                lines += ["else", *_indent(self.block(stmt.else_block))]
            return lines + ["end if"]
        return ["null"]

    def process(self) -> str:
        body = self.block(self.rule.body)
        names = self.locals()
        if names:
            body = [f"var {', '.join(names)}: Bool in", *_indent(body), "end var"]
        return _process(self.header(), body)


def _rule_process(rule: GtdlRule, channels: Mapping[str, str]) -> Tuple[str, str]:
    return lnt_identifier(rule.name), _RuleEmitter(rule, channels).process()


def emit_gtdl(
    rule: GtdlRule, channels: Optional[Mapping[str, str]] = None
) -> LntDocument:
    """Emit one rule as ``process D [gates: FLAG_CHANNEL] (params) is ... end process``.

    Plugin-assigned variables become ``in var`` parameters and are not
    assigned in the body; flag reads receive on the flag's gate and other
    variables are declared in a single ``var ... in ... end var`` block.
    """
    name, text = _rule_process(rule, channels or {})
    return _module(name, {name: text})


def _actual(call: PluginCall, wiring: EngineWiring) -> str:
    if call in wiring.bindings.plugins:
        return "true" if wiring.bindings.plugins[call] else "false"
    return "any Bool"


def emit_engine(
    rules: Sequence[GtdlRule],
    wiring: Optional[EngineWiring] = None,
    name: str = "Engine",
) -> LntDocument:
    """Emit every rule plus an engine process running them with ``par``.

    Pinned plugin values become literal actuals; free ones become ``any Bool``.
    """
    wiring = wiring or EngineWiring()
    processes: Dict[str, str] = {}
    calls: List[str] = []
    engine_gates: List[str] = []
    for rule in rules:
        emitter = _RuleEmitter(rule, wiring.channels)
        process_name, text = _rule_process(rule, wiring.channels)
        processes[process_name] = text
        gates = emitter.gates()
        engine_gates.extend(gate for gate in gates if gate not in engine_gates)

        actuals: List[str] = []
        for parameter in emitter.parameters():
            source = next(
                a.source for a in rule.assigns()
                if a.var == parameter and isinstance(a.source, PluginCall)
            )
            actuals.append(_actual(source, wiring))
        call = process_name
        if gates:
            call += f" [{', '.join(gates)}]"
        if actuals:
            call += f" ({', '.join(actuals)})"
        calls.append(call)

    if len(calls) == 1:
        body = calls
    else:
        body = ["par"]
        for position, call in enumerate(calls):
            if position:
                body.append("||")
            body.extend(_indent([call]))
        body.append("end par")
    engine = lnt_identifier(name)
    header = f"process {engine}"
    if engine_gates:
        header += f" [{', '.join(engine_gates)}: {FLAG_CHANNEL}]"
    processes[engine] = _process(header, body)
    return _module(engine, processes)


def normalise_whitespace(text: str) -> str:
    """Collapse whitespace so documents compare token by token."""
    return " ".join(text.split())
