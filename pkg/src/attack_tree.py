"""Attack trees: YAML schema, LTS translation and the inductive trace oracle.

Tree files are mappings with exactly one node key among ``leaf``, ``or``,
``and`` and ``sand``. The top-level mapping may also carry a ``name``::

    name: LokibotTree
    sand:
      - and:
          - leaf: lokiBotProcSet
          - leaf: lokiBotExtset
      - leaf: lokiBotDet
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, reduce
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterator, Optional, Tuple, Union

import yaml

from .lts import RESERVED_NAMES, Label, Lts, choice, make_leaf, sequence, shuffle

logger = logging.getLogger(__name__)

ActionTrace = Tuple[str, ...]
_STR_TAG = "tag:yaml.org,2002:str"


class TreeSyntaxError(ValueError):
    """Raised when a tree document is malformed.

    Attributes:
        line: 1-based line of the offending node.
        column: 1-based column of the offending node.
    """

    def __init__(self, message: str, line: int = 1, column: int = 1) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NodeKind(str, Enum):
    LEAF = "leaf"
    OR = "or"
    AND = "and"
    SAND = "sand"


@dataclass(frozen=True)
class AttackTree:
    """One node of an attack tree.

    Leaves carry the ``action`` that doubles as the flag channel shared with
    detection rules. Composite nodes carry at least two ordered children.
    """

    kind: NodeKind
    action: Optional[str] = None
    children: Tuple["AttackTree", ...] = ()
    name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is NodeKind.LEAF:
            if not self.action:
                raise ValueError("leaf needs a non-empty action")
            if self.children:
                raise ValueError("leaf cannot have children")
        else:
            if self.action is not None:
                raise ValueError(f"{self.kind.value} node cannot carry an action")
            if len(self.children) < 2:
                raise ValueError(
                    f"{self.kind.value} node needs at least 2 children, "
                    f"got {len(self.children)}"
                )

    @classmethod
    def leaf(cls, action: str, name: Optional[str] = None) -> "AttackTree":
        return cls(NodeKind.LEAF, action=action, name=name)

    @classmethod
    def or_(cls, *children: "AttackTree", name: Optional[str] = None) -> "AttackTree":
        return cls(NodeKind.OR, children=tuple(children), name=name)

    @classmethod
    def and_(cls, *children: "AttackTree", name: Optional[str] = None) -> "AttackTree":
        return cls(NodeKind.AND, children=tuple(children), name=name)

    @classmethod
    def sand(cls, *children: "AttackTree", name: Optional[str] = None) -> "AttackTree":
        return cls(NodeKind.SAND, children=tuple(children), name=name)

    @property
    def is_leaf(self) -> bool:
        return self.kind is NodeKind.LEAF

    def leaves(self) -> Iterator["AttackTree"]:
        if self.is_leaf:
            yield self
            return
        for child in self.children:
            yield from child.leaves()

    def actions(self) -> FrozenSet[str]:
        """The leaf alphabet of the tree."""
        return frozenset(leaf.action for leaf in self.leaves() if leaf.action)

    def depth(self) -> int:
        if self.is_leaf:
            return 1
        return 1 + max(child.depth() for child in self.children)

    def with_name(self, name: Optional[str]) -> "AttackTree":
        return AttackTree(self.kind, self.action, self.children, name)


def _mark(node: yaml.Node) -> Tuple[int, int]:
    return node.start_mark.line + 1, node.start_mark.column + 1


def _fail(message: str, node: yaml.Node) -> TreeSyntaxError:
    line, column = _mark(node)
    return TreeSyntaxError(message, line, column)


def _build(node: yaml.Node, top_level: bool) -> AttackTree:
    if not isinstance(node, yaml.MappingNode):
        raise _fail("expected a mapping with one node key", node)

    name: Optional[str] = None
    found: Optional[Tuple[yaml.Node, yaml.Node]] = None
    for key_node, value_node in node.value:
        key = key_node.value if isinstance(key_node, yaml.ScalarNode) else None
        if top_level and key == "name":
            if not isinstance(value_node, yaml.ScalarNode) or not value_node.value:
                raise _fail("'name' must be a non-empty string", value_node)
            name = value_node.value
            continue
        if key not in {kind.value for kind in NodeKind}:
            raise _fail(f"unknown node kind '{key}'", key_node)
        if found is not None:
            raise _fail("a node mapping carries exactly one node key", key_node)
        found = (key_node, value_node)

    if found is None:
        raise _fail("missing node key (leaf, or, and, sand)", node)
    key_node, value_node = found
    kind = NodeKind(key_node.value)

    if kind is NodeKind.LEAF:
        if not isinstance(value_node, yaml.ScalarNode) or value_node.tag != _STR_TAG:
            raise _fail("leaf action must be a string", value_node)
        action = value_node.value
        if not action:
            raise _fail("leaf action must be non-empty", value_node)
        if action in RESERVED_NAMES:
            raise _fail(f"'{action}' is reserved and cannot name an action", value_node)
        return AttackTree.leaf(action, name=name)

    if not isinstance(value_node, yaml.SequenceNode):
        raise _fail(f"'{kind.value}' expects a list of nodes", value_node)
    children = tuple(_build(child, top_level=False) for child in value_node.value)
    if len(children) < 2:
        raise _fail(
            f"{kind.value} node needs at least 2 children, got {len(children)}",
            key_node,
        )
    return AttackTree(kind, children=children, name=name)


def parse_tree(text: str) -> AttackTree:
    """Parse a tree document.

    Args:
        text: YAML text in the tree schema.

    Returns:
        The tree, with child order preserved.

    Raises:
        TreeSyntaxError: On YAML syntax errors, unknown node kinds and
            composite nodes with fewer than two children.

    Examples:
        >>> tree = parse_tree("{leaf: flag_a}")
        >>> tree.action, tree.is_leaf
        ('flag_a', True)
    """
    try:
        document = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line, column = (mark.line + 1, mark.column + 1) if mark else (1, 1)
        raise TreeSyntaxError(f"invalid YAML: {e.problem or e}", line, column) from e
    except yaml.YAMLError as e:
        raise TreeSyntaxError(f"invalid YAML: {e}") from e
    if document is None:
        raise TreeSyntaxError("empty tree document")
    tree = _build(document, top_level=True)
    logger.debug(
        f"Parsed tree with {len(list(tree.leaves()))} leaves, depth {tree.depth()}"
    )
    return tree


def load_tree(path: Union[str, Path]) -> AttackTree:
    """Read and parse a ``.tree.yaml`` file."""
    return parse_tree(Path(path).read_text(encoding="utf-8"))


def _to_plain(tree: AttackTree) -> Dict[str, Any]:
    if tree.is_leaf:
        return {NodeKind.LEAF.value: tree.action}
    return {tree.kind.value: [_to_plain(child) for child in tree.children]}


def pretty_print(tree: AttackTree) -> str:
    """Render ``tree`` in the YAML schema accepted by :func:`parse_tree`."""
    document: Dict[str, Any] = {}
    if tree.name:
        document["name"] = tree.name
    document.update(_to_plain(tree))
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=False)


def tree_to_lts(tree: AttackTree) -> Lts:
    """Translate a tree to its tau-free LTS.

    LEAF becomes a leaf LTS, OR a choice, AND a shuffle and SAND a sequence.
    """
    if tree.is_leaf:
        return make_leaf(Label.observable(tree.action or ""))
    parts = [tree_to_lts(child) for child in tree.children]
    if tree.kind is NodeKind.OR:
        return choice(parts)
    if tree.kind is NodeKind.AND:
        return shuffle(parts)
    return sequence(parts)


@lru_cache(maxsize=None)
def _interleavings(first: ActionTrace, second: ActionTrace) -> FrozenSet[ActionTrace]:
    if not first:
        return frozenset({second})
    if not second:
        return frozenset({first})
    head_first = {(first[0],) + rest for rest in _interleavings(first[1:], second)}
    head_second = {(second[0],) + rest for rest in _interleavings(first, second[1:])}
    return frozenset(head_first | head_second)


def _shuffle_sets(
    left: FrozenSet[ActionTrace], right: FrozenSet[ActionTrace]
) -> FrozenSet[ActionTrace]:
    merged = set()
    for first in left:
        for second in right:
            merged.update(_interleavings(first, second))
    return frozenset(merged)


def _concat_sets(
    left: FrozenSet[ActionTrace], right: FrozenSet[ActionTrace]
) -> FrozenSet[ActionTrace]:
    return frozenset(first + second for first in left for second in right)


def oracle_traces(tree: AttackTree) -> FrozenSet[ActionTrace]:
    """Compute the trace set of ``tree`` directly from the inductive definition.

    Union for OR, pairwise interleaving folded left for AND and concatenation
    for SAND. Independent of the LTS code.
    """
    if tree.is_leaf:
        return frozenset({(tree.action or "",)})
    child_sets = [oracle_traces(child) for child in tree.children]
    if tree.kind is NodeKind.OR:
        return frozenset().union(*child_sets)
    if tree.kind is NodeKind.AND:
        return reduce(_shuffle_sets, child_sets)
    return reduce(_concat_sets, child_sets)
