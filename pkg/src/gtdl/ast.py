"""Abstract syntax of GTDL detection rules.

Grammar (``:=`` and ``=`` both denote assignment)::

    block  ::= assign ; block | stmt
    assign ::= v := inPluginCall(f, "arg") | v := GlobalFlag.IsSet("F") | v := e
    stmt   ::= IF c THEN block [ELSE block] END IF | GlobalFlag.Set("D") ; | skip
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Tuple, Union


@dataclass(frozen=True)
class BoolLiteral:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


Expr = Union[BoolLiteral, Var]


class BoolOp(str, Enum):
    AND = "AND"
    OR = "OR"


class CompareOp(str, Enum):
    EQ = "=="
    NEQ = "!="


@dataclass(frozen=True)
class Not:
    operand: "Cond"


@dataclass(frozen=True)
class BinaryCond:
    op: BoolOp
    left: "Cond"
    right: "Cond"


@dataclass(frozen=True)
class Compare:
    var: Var
    op: CompareOp
    expr: Expr


Cond = Union[BoolLiteral, Var, Not, BinaryCond, Compare]


@dataclass(frozen=True)
class PluginCall:
    """``inPluginCall(function, "argument")``; its value comes from the valuation."""

    function: str
    argument: str

    def __str__(self) -> str:
        return f'{self.function}("{self.argument}")'


@dataclass(frozen=True)
class FlagIsSet:
    flag: str


Source = Union[PluginCall, FlagIsSet, BoolLiteral, Var]


@dataclass(frozen=True)
class Assign:
    var: str
    source: Source


@dataclass(frozen=True)
class SetFlag:
    flag: str


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class If:
    cond: Cond
    then_block: "Block"
    else_block: "Block"


Stmt = Union[If, SetFlag, Skip]


@dataclass(frozen=True)
class Block:
    assigns: Tuple[Assign, ...]
    stmt: Stmt

    @property
    def is_skip(self) -> bool:
        return not self.assigns and isinstance(self.stmt, Skip)


SKIP_BLOCK = Block((), Skip())


def walk_blocks(block: Block) -> Iterator[Block]:
    """Yield ``block`` and every nested block in source order."""
    yield block
    if isinstance(block.stmt, If):
        yield from walk_blocks(block.stmt.then_block)
        yield from walk_blocks(block.stmt.else_block)


@dataclass(frozen=True)
class GtdlRule:
    """A parsed ``[DETECTION]`` section."""

    name: str
    body: Block
    apply_when: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("detection name must be non-empty")

    def assigns(self) -> List[Assign]:
        return [assign for block in walk_blocks(self.body) for assign in block.assigns]

    def plugin_calls(self) -> List[PluginCall]:
        """Plugin calls in source order, without duplicates."""
        calls: List[PluginCall] = []
        for assign in self.assigns():
            if isinstance(assign.source, PluginCall) and assign.source not in calls:
                calls.append(assign.source)
        return calls

    def flag_reads(self) -> List[str]:
        """Flags read through ``GlobalFlag.IsSet``, in source order and unique."""
        flags: List[str] = []
        for assign in self.assigns():
            if isinstance(assign.source, FlagIsSet) and assign.source.flag not in flags:
                flags.append(assign.source.flag)
        return flags

    def flags_set(self) -> List[str]:
        flags: List[str] = []
        for block in walk_blocks(self.body):
            if isinstance(block.stmt, SetFlag) and block.stmt.flag not in flags:
                flags.append(block.stmt.flag)
        return flags

    def statement_count(self) -> int:
        """Assignments plus non-skip statements; bounds the length of any run."""
        count = 0
        for block in walk_blocks(self.body):
            count += len(block.assigns)
            if not isinstance(block.stmt, Skip):
                count += 1
        return count
