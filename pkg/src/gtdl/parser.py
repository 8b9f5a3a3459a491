"""Tokenizer and recursive-descent parser for GTDL rule files.

A file holds one or more sections of the form::

    [DETECTION] Detection_name = 'LokibotProcess'  Apply_when = "Process"
    [RULE]
    v_process = inPluginCall(IsProcessName, "ytpgwim");
    IF v_process THEN
        GlobalFlag.Set("LokibotProcess");
    END IF
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set, Union

from .ast import (
    SKIP_BLOCK,
    Assign,
    BinaryCond,
    Block,
    BoolLiteral,
    BoolOp,
    Compare,
    CompareOp,
    Cond,
    Expr,
    FlagIsSet,
    GtdlRule,
    If,
    Not,
    PluginCall,
    SetFlag,
    Skip,
    Source,
    Stmt,
    Var,
)
from .errors import GtdlSyntaxError

logger = logging.getLogger(__name__)

_TOKEN_SPEC = [
    ("COMMENT", r"(?:#|//)[^\n]*"),
    ("SECTION", r"\[[A-Za-z_]+\]"),
    ("STRING", r"'[^'\n]*'|\"[^\"\n]*\""),
    ("NUMBER", r"\d+(?:\.\d+)?"),
    ("ASSIGN", r":="),
    ("EQ", r"=="),
    ("NEQ", r"!=|<>|≠"),
    ("EQUALS", r"="),
    ("SEMI", r";"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("COMMA", r","),
    ("DOT", r"\."),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("NEWLINE", r"\n"),
    ("SPACE", r"[ \t\r]+"),
    ("MISMATCH", r"."),
]
TOKEN_PATTERN = re.compile(
    "|".join(f"(?P<{name}>{regex})" for name, regex in _TOKEN_SPEC)
)

KEYWORDS = frozenset({"IF", "THEN", "ELSE", "END", "AND", "OR", "NOT", "skip"})
_BOOLEANS = {"true": True, "false": False, "TRUE": True, "FALSE": False}


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    """Split ``text`` into tokens, dropping whitespace and comments."""
    tokens: List[Token] = []
    line, line_start = 1, 0
    for match in TOKEN_PATTERN.finditer(text):
        kind = match.lastgroup or "MISMATCH"
        value = match.group()
        column = match.start() - line_start + 1
        if kind == "NEWLINE":
            line += 1
            line_start = match.end()
            continue
        if kind in ("SPACE", "COMMENT"):
            continue
        if kind == "MISMATCH":
            raise GtdlSyntaxError(f"unexpected character {value!r}", line, column)
        tokens.append(Token(kind, value, line, column))
    tokens.append(Token("EOF", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    # token helpers

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.peek()
        self.pos += 1
        return token

    def error(self, message: str, token: Optional[Token] = None) -> GtdlSyntaxError:
        token = token or self.peek()
        return GtdlSyntaxError(message, token.line, token.column)

    def at_keyword(self, *words: str) -> bool:
        token = self.peek()
        return token.kind == "IDENT" and token.value in words

    def at_eof(self) -> bool:
        return self.peek().kind == "EOF"

    def at_section(self, name: str) -> bool:
        token = self.peek()
        return token.kind == "SECTION" and token.value == f"[{name}]"

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        token = self.peek()
        if token.kind != kind:
            shown = token.value or "end of input"
            raise self.error(f"expected {what or kind.lower()}, found {shown!r}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            shown = self.peek().value or "end of input"
            raise self.error(f"expected '{word}', found {shown!r}")
        return self.advance()

    def expect_string(self, what: str) -> str:
        return self.expect("STRING", what).value[1:-1]

    # sections

    def parse_file(self) -> List[GtdlRule]:
        rules: List[GtdlRule] = []
        while not self.at_eof():
            if not self.at_section("DETECTION"):
                raise self.error("expected a [DETECTION] section")
            rules.append(self.parse_section())
        return rules

    def parse_section(self) -> GtdlRule:
        section = self.advance()
        header: Dict[str, str] = {}
        while not self.at_section("RULE"):
            key = self.expect("IDENT", "a header key or [RULE]")
            self.expect("EQUALS", "'='")
            header[key.value] = self.expect_string("a quoted header value")
        self.advance()

        name = header.get("Detection_name")
        if not name:
            raise self.error("section has no Detection_name", section)
        for key in header:
            if key not in ("Detection_name", "Apply_when"):
                logger.debug(f"Ignoring header key '{key}' in detection '{name}'")

        body = self.parse_block(
            set(), lambda: self.at_eof() or self.at_section("DETECTION")
        )
        logger.debug(f"Parsed detection '{name}'")
        return GtdlRule(name=name, body=body, apply_when=header.get("Apply_when"))

    # blocks and statements

    def parse_block(self, assigned: Set[str], at_end: Callable[[], bool]) -> Block:
        assigns: List[Assign] = []
        scope = set(assigned)
        while not at_end():
            token = self.peek()
            is_assignment = (
                token.kind == "IDENT"
                and token.value not in KEYWORDS
                and self.peek(1).kind in ("ASSIGN", "EQUALS")
            )
            if not is_assignment:
                stmt = self.parse_stmt(scope)
                if not at_end():
                    raise self.error("a block ends with its single statement")
                return Block(tuple(assigns), stmt)
            assigns.append(self.parse_assign(scope))
            scope.add(assigns[-1].var)
        return Block(tuple(assigns), Skip())

    def parse_assign(self, scope: Set[str]) -> Assign:
        target = self.advance()
        self.advance()
        source = self.parse_source(scope)
        self.expect("SEMI", "';' after assignment")
        return Assign(target.value, source)

    def parse_source(self, scope: Set[str]) -> Source:
        token = self.peek()
        if token.kind == "IDENT" and token.value == "inPluginCall":
            self.advance()
            self.expect("LPAREN", "'('")
            function = self.peek()
            if function.kind == "IDENT":
                self.advance()
                name = function.value
            else:
                name = self.expect_string("a plugin function name")
            self.expect("COMMA", "','")
            argument = self.expect_string("a quoted plugin argument")
            self.expect("RPAREN", "')'")
            return PluginCall(name, argument)
        if token.kind == "IDENT" and token.value == "GlobalFlag":
            self.advance()
            self.expect("DOT", "'.'")
            method = self.expect("IDENT", "'IsSet'")
            if method.value != "IsSet":
                raise self.error(
                    f"'{method.value}' cannot be assigned; use GlobalFlag.IsSet",
                    method,
                )
            self.expect("LPAREN", "'('")
            flag = self.expect_string("a quoted flag name")
            self.expect("RPAREN", "')'")
            return FlagIsSet(flag)
        return self.parse_expr(scope)

    def parse_stmt(self, scope: Set[str]) -> Stmt:
        token = self.peek()
        if self.at_keyword("IF"):
            self.advance()
            cond = self.parse_cond(scope)
            self.expect_keyword("THEN")
            then_block = self.parse_block(
                scope, lambda: self.at_keyword("ELSE", "END") or self.at_eof()
            )
            else_block = SKIP_BLOCK
            if self.at_keyword("ELSE"):
                self.advance()
                else_block = self.parse_block(
                    scope, lambda: self.at_keyword("END") or self.at_eof()
                )
            self.expect_keyword("END")
            self.expect_keyword("IF")
            if self.peek().kind == "SEMI":
                self.advance()
            return If(cond, then_block, else_block)
        if token.kind == "IDENT" and token.value == "GlobalFlag":
            self.advance()
            self.expect("DOT", "'.'")
            method = self.expect("IDENT", "'Set'")
            if method.value != "Set":
                raise self.error(
                    f"'GlobalFlag.{method.value}' is not a statement", method
                )
            self.expect("LPAREN", "'('")
            flag = self.expect_string("a quoted flag name")
            self.expect("RPAREN", "')'")
            self.expect("SEMI", "';' after GlobalFlag.Set")
            if not flag:
                raise self.error("flag name must be non-empty", token)
            return SetFlag(flag)
        if self.at_keyword("skip"):
            self.advance()
            if self.peek().kind == "SEMI":
                self.advance()
            return Skip()
        found = token.value or "end of input"
        raise self.error(f"expected a statement, found {found!r}")

    # conditions and expressions

    def parse_cond(self, scope: Set[str]) -> Cond:
        cond = self.parse_conjunction(scope)
        while self.at_keyword("OR"):
            self.advance()
            cond = BinaryCond(BoolOp.OR, cond, self.parse_conjunction(scope))
        return cond

    def parse_conjunction(self, scope: Set[str]) -> Cond:
        cond = self.parse_negation(scope)
        while self.at_keyword("AND"):
            self.advance()
            cond = BinaryCond(BoolOp.AND, cond, self.parse_negation(scope))
        return cond

    def parse_negation(self, scope: Set[str]) -> Cond:
        if self.at_keyword("NOT"):
            self.advance()
            return Not(self.parse_negation(scope))
        return self.parse_atom(scope)

    def parse_atom(self, scope: Set[str]) -> Cond:
        if self.peek().kind == "LPAREN":
            self.advance()
            cond = self.parse_cond(scope)
            self.expect("RPAREN", "')'")
            return cond
        expr = self.parse_expr(scope)
        if self.peek().kind in ("EQ", "NEQ"):
            op = CompareOp.EQ if self.advance().kind == "EQ" else CompareOp.NEQ
            if not isinstance(expr, Var):
                raise self.error("the left side of a comparison must be a variable")
            return Compare(expr, op, self.parse_expr(scope))
        return expr

    def parse_expr(self, scope: Set[str]) -> Expr:
        token = self.peek()
        if token.kind in ("NUMBER", "STRING"):
            raise self.error(f"non-Boolean literal {token.value}")
        if token.kind != "IDENT" or token.value in KEYWORDS:
            found = token.value or "end of input"
            raise self.error(f"expected a Boolean expression, found {found!r}")
        self.advance()
        if token.value in _BOOLEANS:
            return BoolLiteral(_BOOLEANS[token.value])
        if token.value not in scope:
            raise self.error(
                f"variable '{token.value}' is used before it is assigned", token
            )
        return Var(token.value)


def parse_gtdl(text: str) -> List[GtdlRule]:
    """Parse every ``[DETECTION]`` section of ``text``, preserving order.

    Raises:
        GtdlSyntaxError: On malformed text, reads of unassigned variables and
            non-Boolean literals.
    """
    rules = _Parser(tokenize(text)).parse_file()
    logger.debug(f"Parsed {len(rules)} GTDL rules")
    return rules


def load_gtdl(path: Union[str, Path]) -> List[GtdlRule]:
    return parse_gtdl(Path(path).read_text(encoding="utf-8"))
