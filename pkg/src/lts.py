"""Labeled transition systems and the composition operators built on them.

Every other module works on the :class:`Lts` value defined here. States are
dense integers, transitions are a frozen set of ``(source, label, target)``
triples and successful completion is marked explicitly through ``terminals``.
Compositions glue states together instead of inserting silent steps, so an
LTS built from an attack tree never contains ``tau``.
"""

from __future__ import annotations

import logging
import shlex
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

logger = logging.getLogger(__name__)

TAU_TOKEN = "tau"
TICK_TOKEN = "√"
RESERVED_NAMES = frozenset({TAU_TOKEN, TICK_TOKEN})


class LtsError(ValueError):
    """Raised for malformed transition systems or unsupported inputs.

    Attributes:
        state: The offending state id when the error concerns one state.
    """

    def __init__(self, message: str, state: Optional[int] = None) -> None:
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class Label:
    """An action name, or the silent action when ``name`` is None."""

    name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.name is not None and not self.name:
            raise LtsError("observable labels need a non-empty name")

    @classmethod
    def observable(cls, name: str) -> "Label":
        """Create an observable label, rejecting the reserved tokens."""
        if name in RESERVED_NAMES:
            raise LtsError(f"'{name}' is reserved and cannot name an action")
        return cls(name)

    @property
    def is_tau(self) -> bool:
        return self.name is None

    def sort_key(self) -> Tuple[int, str]:
        """Order silent actions first, then observable names lexicographically."""
        return (0, "") if self.name is None else (1, self.name)

    def __str__(self) -> str:
        return TAU_TOKEN if self.name is None else self.name


TAU = Label()
# Successful termination, used by the checkers to observe terminal markers.
TICK = Label(TICK_TOKEN)

Transition = Tuple[int, Label, int]
Trace = Tuple[Label, ...]


def _transition_key(transition: Transition) -> Tuple[int, Tuple[int, str], int]:
    source, label, target = transition
    return source, label.sort_key(), target


@dataclass(frozen=True)
class Lts:
    """A finite labeled transition system over states ``0 .. num_states - 1``."""

    num_states: int
    initial: int
    transitions: FrozenSet[Transition]
    terminals: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        if self.num_states < 1:
            raise LtsError("an LTS needs at least one state")
        if not 0 <= self.initial < self.num_states:
            raise LtsError(
                f"initial state {self.initial} is out of range", state=self.initial
            )
        for source, label, target in self.transitions:
            if not isinstance(label, Label):
                raise LtsError(f"transition label {label!r} is not a Label")
            for state in (source, target):
                if not 0 <= state < self.num_states:
                    raise LtsError(
                        f"transition endpoint {state} is out of range", state=state
                    )
        for state in self.terminals:
            if not 0 <= state < self.num_states:
                raise LtsError(f"terminal state {state} is out of range", state=state)

    @property
    def states(self) -> range:
        return range(self.num_states)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    @cached_property
    def _adjacency(self) -> Tuple[Tuple[Tuple[Label, int], ...], ...]:
        outgoing: List[List[Tuple[Label, int]]] = [[] for _ in self.states]
        for source, label, target in sorted(self.transitions, key=_transition_key):
            outgoing[source].append((label, target))
        return tuple(tuple(edges) for edges in outgoing)

    def successors(self, state: int) -> Tuple[Tuple[Label, int], ...]:
        """Return the ``(label, target)`` pairs leaving ``state`` in sorted order."""
        return self._adjacency[state]

    @cached_property
    def alphabet(self) -> FrozenSet[Label]:
        """Observable labels occurring on some transition."""
        return frozenset(label for _, label, _ in self.transitions if not label.is_tau)

    @property
    def is_tau_free(self) -> bool:
        return all(not label.is_tau for _, label, _ in self.transitions)

    def has_incoming(self, state: int) -> bool:
        return any(target == state for _, _, target in self.transitions)

    def reachable(self) -> "Lts":
        """Return a copy restricted to states reachable from the initial state.

        States are renumbered in breadth-first order from the initial state.
        """
        order = {self.initial: 0}
        queue = deque([self.initial])
        while queue:
            state = queue.popleft()
            for _, target in self.successors(state):
                if target not in order:
                    order[target] = len(order)
                    queue.append(target)
        transitions = frozenset(
            (order[source], label, order[target])
            for source, label, target in self.transitions
            if source in order
        )
        terminals = frozenset(
            order[state] for state in self.terminals if state in order
        )
        return Lts(len(order), 0, transitions, terminals)


class LtsBuilder:
    """Incremental constructor used by every composition operator.

    Duplicate transitions collapse because transitions are kept in a set.
    """

    def __init__(self) -> None:
        self._num_states = 0
        self._transitions: Set[Transition] = set()
        self._terminals: Set[int] = set()

    @property
    def num_states(self) -> int:
        return self._num_states

    def add_state(self, terminal: bool = False) -> int:
        state = self._num_states
        self._num_states += 1
        if terminal:
            self._terminals.add(state)
        return state

    def add_transition(self, source: int, label: Label, target: int) -> None:
        self._transitions.add((source, label, target))

    def mark_terminal(self, state: int) -> None:
        self._terminals.add(state)

    def build(self, initial: int = 0) -> Lts:
        return Lts(
            self._num_states,
            initial,
            frozenset(self._transitions),
            frozenset(self._terminals),
        )


def _require_parts(parts: Sequence[Lts], operator: str) -> None:
    if not parts:
        raise LtsError(f"{operator} needs at least one part")


def _as_label(action: "Label | str") -> Label:
    return action if isinstance(action, Label) else Label.observable(action)


def make_leaf(action: "Label | str") -> Lts:
    """Return the two-state LTS performing ``action`` once and terminating."""
    label = _as_label(action)
    if label.is_tau:
        raise LtsError("silent action not allowed at leaf")
    return Lts(2, 0, frozenset({(0, label, 1)}), frozenset({1}))


def _copy_into(
    builder: LtsBuilder, part: Lts, preset: Dict[int, int]
) -> Dict[int, int]:
    """Copy ``part`` into ``builder`` and return the state renumbering.

    States listed in ``preset`` are mapped onto existing builder states, which
    is how initial-state gluing is realised.
    """
    mapping = dict(preset)
    for state in part.states:
        if state not in mapping:
            mapping[state] = builder.add_state()
    for source, label, target in part.transitions:
        builder.add_transition(mapping[source], label, mapping[target])
    return mapping


def choice(parts: Sequence[Lts]) -> Lts:
    """Nondeterministic choice: the traces are the union of the parts' traces.

    Every part's initial state is glued onto one fresh root, so no silent step
    is introduced. A part whose initial state is re-entered by one of its own
    transitions keeps that state and has its first moves copied to the root.
    """
    _require_parts(parts, "choice")
    builder = LtsBuilder()
    root = builder.add_state()
    for part in parts:
        glue = not part.has_incoming(part.initial)
        mapping = _copy_into(builder, part, {part.initial: root} if glue else {})
        if not glue:
            for label, target in part.successors(part.initial):
                builder.add_transition(root, label, mapping[target])
            if part.initial in part.terminals:
                builder.mark_terminal(root)
        for state in part.terminals:
            builder.mark_terminal(mapping[state])
    return builder.build(root)


def shuffle(parts: Sequence[Lts]) -> Lts:
    """Asynchronous product: each transition advances exactly one component.

    Only the product states reachable from the tuple of initial states are
    materialised. A product state is terminal when every component is.
    """
    _require_parts(parts, "shuffle")
    builder = LtsBuilder()
    start = tuple(part.initial for part in parts)
    index = {start: builder.add_state()}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        source = index[current]
        if all(state in part.terminals for state, part in zip(current, parts)):
            builder.mark_terminal(source)
        for position, part in enumerate(parts):
            for label, target in part.successors(current[position]):
                following = current[:position] + (target,) + current[position + 1 :]
                if following not in index:
                    index[following] = builder.add_state()
                    queue.append(following)
                builder.add_transition(source, label, index[following])
    return builder.build(index[start])


def sequence(parts: Sequence[Lts]) -> Lts:
    """Sequential composition: traces are the concatenation of the parts' traces.

    The terminal states of each part are glued to the initial state of the
    next one. With a single exit the two states are identified; with several
    exits the next part's first moves are copied onto every exit.
    """
    _require_parts(parts, "sequence")
    builder = LtsBuilder()
    first = parts[0]
    mapping = _copy_into(builder, first, {})
    initial = mapping[first.initial]
    exits = sorted(mapping[state] for state in first.terminals)

    for part in parts[1:]:
        entry_reentered = part.has_incoming(part.initial)
        preset: Dict[int, int] = {}
        if not entry_reentered and len(exits) == 1:
            preset[part.initial] = exits[0]
        identified = part.initial in preset

        mapping = dict(preset)
        for state in part.states:
            if state == part.initial and not identified and not entry_reentered:
                continue
            if state not in mapping:
                mapping[state] = builder.add_state()
        for source, label, target in part.transitions:
            if source == part.initial and not identified and not entry_reentered:
                continue
            builder.add_transition(mapping[source], label, mapping[target])

        if not identified:
            for exit_state in exits:
                for label, target in part.successors(part.initial):
                    builder.add_transition(exit_state, label, mapping[target])

        next_exits = {mapping[state] for state in part.terminals if state in mapping}
        if part.initial in part.terminals and not identified:
            next_exits.update(exits)
        exits = sorted(next_exits)

    for state in exits:
        builder.mark_terminal(state)
    return builder.build(initial)


def _reachable_graph(lts: Lts) -> "nx.DiGraph":
    graph = nx.DiGraph()
    graph.add_nodes_from(lts.states)
    graph.add_edges_from((source, target) for source, _, target in lts.transitions)
    reachable = nx.descendants(graph, lts.initial) | {lts.initial}
    return graph.subgraph(reachable)


def check_acyclic(lts: Lts) -> List[int]:
    """Return the reachable states in topological order.

    Raises:
        LtsError: If a cycle is reachable from the initial state; the error
            names a state on the cycle.
    """
    graph = _reachable_graph(lts)
    try:
        cycle = nx.find_cycle(graph, source=lts.initial)
    except nx.NetworkXNoCycle:
        return list(nx.topological_sort(graph))
    state = cycle[0][0]
    raise LtsError(f"cycle detected through state {state}", state=state)


def enumerate_traces(lts: Lts, weak: bool = False) -> FrozenSet[Trace]:
    """Return every maximal trace from the initial state to a terminal state.

    In weak mode silent actions are erased. In strong mode ``tau`` is kept as
    an ordinary action of the trace.

    Raises:
        LtsError: If the LTS has a reachable cycle.
    """
    order = check_acyclic(lts)
    traces_from: Dict[int, FrozenSet[Trace]] = {}
    for state in reversed(order):
        collected: Set[Trace] = {()} if state in lts.terminals else set()
        for label, target in lts.successors(state):
            prefix: Trace = () if weak and label.is_tau else (label,)
            collected.update(prefix + suffix for suffix in traces_from[target])
        traces_from[state] = frozenset(collected)
    return traces_from[lts.initial]


def as_names(traces: Iterable[Trace]) -> FrozenSet[Tuple[str, ...]]:
    """Render traces as tuples of action names, convenient for comparisons."""
    return frozenset(tuple(str(label) for label in trace) for trace in traces)


def format_trace(trace: Iterable["Label | str"]) -> str:
    """Render a trace as ``a.b.c``; the empty trace is ``eps``."""
    rendered = ".".join(str(label) for label in trace)
    return rendered or "eps"


def tau_closure(lts: Lts) -> Tuple[FrozenSet[int], ...]:
    """For each state, the states reachable through zero or more silent steps."""
    silent: List[List[int]] = [[] for _ in lts.states]
    for source, label, target in lts.transitions:
        if label.is_tau:
            silent[source].append(target)
    if not any(silent):
        return tuple(frozenset((state,)) for state in lts.states)

    closure: List[FrozenSet[int]] = []
    for state in lts.states:
        seen = {state}
        stack = [state]
        while stack:
            for target in silent[stack.pop()]:
                if target not in seen:
                    seen.add(target)
                    stack.append(target)
        closure.append(frozenset(seen))
    return tuple(closure)


def saturate(lts: Lts, weak: bool = True) -> Lts:
    """Return the LTS the checkers compare, with termination made observable.

    A fresh sink state is appended and every terminal state gets a ``TICK``
    transition into it. In weak mode the transitions are replaced by the weak
    transitions ``s =a=> t`` (``tau* a tau*``), ``s =tau=> t`` is reflexive and
    ``s =TICK=> sink`` holds whenever a terminal state is silently reachable.
    """
    sink = lts.num_states
    if not weak:
        transitions = set(lts.transitions)
        transitions.update((state, TICK, sink) for state in lts.terminals)
        return Lts(
            lts.num_states + 1, lts.initial, frozenset(transitions), frozenset({sink})
        )

    closure = tau_closure(lts)
    saturated: Set[Transition] = set()
    for state in lts.states:
        reach = closure[state]
        for middle in reach:
            saturated.add((state, TAU, middle))
            if middle in lts.terminals:
                saturated.add((state, TICK, sink))
            for label, target in lts.successors(middle):
                if label.is_tau:
                    continue
                for final in closure[target]:
                    saturated.add((state, label, final))
    logger.debug(
        f"Saturated {lts.num_transitions} transitions into {len(saturated)} weak ones"
    )
    return Lts(lts.num_states + 1, lts.initial, frozenset(saturated), frozenset({sink}))


def minimize(lts: Lts, relation: str = "strong") -> Lts:
    """Return the quotient of ``lts`` under strong or weak bisimilarity.

    The weak quotient drops silent self-loops on blocks. Quotient states are
    numbered breadth-first from the initial block and unreachable states are
    discarded.
    """
    from .partition import refine

    if relation not in ("strong", "weak"):
        raise LtsError(f"unknown minimisation relation '{relation}'")
    weak = relation == "weak"
    partition = refine(saturate(lts, weak=weak))
    blocks = partition.blocks

    transitions = frozenset(
        (blocks[source], label, blocks[target])
        for source, label, target in lts.transitions
        if not (weak and label.is_tau and blocks[source] == blocks[target])
    )
    terminals = frozenset(blocks[state] for state in lts.terminals)
    quotient = Lts(
        partition.num_blocks, blocks[lts.initial], transitions, terminals
    ).reachable()
    logger.debug(
        f"Minimised ({relation}) {lts.num_states} states to {quotient.num_states}"
    )
    return quotient


def dump_lts(lts: Lts) -> str:
    """Serialise ``lts`` to the plain-text interchange format."""
    lines = [f"lts {lts.num_states} {lts.num_transitions} {lts.initial}"]
    for source, label, target in sorted(lts.transitions, key=_transition_key):
        lines.append(f"{source} {shlex.quote(str(label))} {target}")
    terminals = " ".join(str(state) for state in sorted(lts.terminals))
    lines.append(f"terminal {terminals}".rstrip())
    return "\n".join(lines) + "\n"


def load_lts(text: str) -> Lts:
    """Parse the interchange format written by :func:`dump_lts`.

    Blank lines and lines starting with ``#`` are ignored.

    Raises:
        LtsError: If the header, a transition line or the terminal line is
            malformed, the declared counts do not match, or a transition uses
            the reserved termination label.
    """
    lines = [
        line
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise LtsError("empty LTS dump")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "lts":
        raise LtsError(f"malformed header line: {lines[0]!r}")
    try:
        num_states, num_transitions, initial = (int(value) for value in header[1:])
    except ValueError as e:
        raise LtsError(f"malformed header line: {lines[0]!r}") from e

    body = lines[1:]
    if not body or not body[-1].startswith("terminal"):
        raise LtsError("missing 'terminal' line")
    transitions: Set[Transition] = set()
    for line in body[:-1]:
        fields = shlex.split(line)
        if len(fields) != 3:
            raise LtsError(f"malformed transition line: {line!r}")
        label = TAU if fields[1] == TAU_TOKEN else Label.observable(fields[1])
        try:
            transitions.add((int(fields[0]), label, int(fields[2])))
        except ValueError as e:
            raise LtsError(f"malformed transition line: {line!r}") from e
    if len(transitions) != num_transitions:
        raise LtsError(
            f"header declares {num_transitions} transitions, found {len(transitions)}"
        )
    try:
        terminals = frozenset(int(value) for value in body[-1].split()[1:])
    except ValueError as e:
        raise LtsError(f"malformed terminal line: {body[-1]!r}") from e
    return Lts(num_states, initial, frozenset(transitions), terminals)
