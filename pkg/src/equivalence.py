"""Conformance relations between transition systems.

All checkers observe successful termination: terminal states are saturated
with a tick transition before comparing, see :func:`src.lts.saturate`.
"""

import logging
import time
from collections import deque
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, Field

from .lts import Label, Lts, Trace, format_trace, saturate, tau_closure
from .partition import refine

logger = logging.getLogger(__name__)


class RelationKind(str, Enum):
    """Conformance relations; directional kinds read ``lhs ⊑ rhs``."""

    STRONG_BISIM = "strong-bisim"
    WEAK_BISIM = "weak-bisim"
    STRONG_SIM = "strong-sim"
    WEAK_SIM = "weak-sim"
    TRACE_EQ = "trace-eq"
    TRACE_INCL = "trace-incl"
    WEAK_TRACE_EQ = "weak-trace-eq"
    WEAK_TRACE_INCL = "weak-trace-incl"

    @property
    def is_weak(self) -> bool:
        return self.value.startswith("weak-")

    @property
    def is_directional(self) -> bool:
        return self.value.endswith("-sim") or self.value.endswith("-incl")


class TraceMode(str, Enum):
    EQ = "eq"
    INCL = "incl"


class VerdictStats(BaseModel):
    """Sizes and effort of one check.

    ``iterations`` counts refinement rounds for bisimulation, pruned pairs for
    simulation and explored product states for trace relations.
    """

    states_lhs: int
    states_rhs: int
    iterations: int = 0
    elapsed_ms: float = 0.0


class Verdict(BaseModel):
    kind: RelationKind
    holds: bool
    counterexample: Optional[List[str]] = Field(default=None)
    stats: VerdictStats

    def to_record(self) -> str:
        """Single-line machine-readable record."""
        cex = "none"
        if self.counterexample is not None:
            cex = format_trace(self.counterexample)
        return (
            f"kind={self.kind.value} holds={str(self.holds).lower()} cex={cex} "
            f"states={self.stats.states_lhs},{self.stats.states_rhs} "
            f"millis={self.stats.elapsed_ms:.3f}"
        )

    def to_report(self) -> str:
        """Human-readable multi-line report."""
        status = "HOLDS" if self.holds else "FAILS"
        lines = [
            f"Relation:  {self.kind.value}",
            f"Verdict:   {status}",
            f"States:    lhs={self.stats.states_lhs} rhs={self.stats.states_rhs}",
            f"Effort:    {self.stats.iterations} iterations"
            f" in {self.stats.elapsed_ms:.1f} ms",
        ]
        if self.counterexample is not None:
            lines.append(f"Counterexample: {format_trace(self.counterexample)}")
        elif not self.holds:
            lines.append("Counterexample: none (the systems are trace-equivalent)")
        return "\n".join(lines)


def _disjoint_union(first: Lts, second: Lts) -> Tuple[Lts, int]:
    offset = first.num_states
    transitions = set(first.transitions)
    transitions.update(
        (source + offset, label, target + offset)
        for source, label, target in second.transitions
    )
    terminals = set(first.terminals)
    terminals.update(state + offset for state in second.terminals)
    union = Lts(
        first.num_states + second.num_states,
        first.initial,
        frozenset(transitions),
        frozenset(terminals),
    )
    return union, offset


def _verdict(
    kind: RelationKind,
    holds: bool,
    counterexample: Optional[Trace],
    lhs: Lts,
    rhs: Lts,
    iterations: int,
    started: float,
) -> Verdict:
    return Verdict(
        kind=kind,
        holds=holds,
        counterexample=(
            None
            if counterexample is None
            else [str(label) for label in counterexample]
        ),
        stats=VerdictStats(
            states_lhs=lhs.num_states,
            states_rhs=rhs.num_states,
            iterations=iterations,
            elapsed_ms=(time.perf_counter() - started) * 1000.0,
        ),
    )


def _bisim(lhs: Lts, rhs: Lts, weak: bool) -> Verdict:
    started = time.perf_counter()
    left, right = saturate(lhs, weak=weak), saturate(rhs, weak=weak)
    union, offset = _disjoint_union(left, right)
    partition = refine(union)
    holds = partition.same_block(left.initial, offset + right.initial)
    counterexample = None
    if not holds:
        counterexample, _ = _distinguishing_trace(lhs, rhs, TraceMode.EQ, weak)
    kind = RelationKind.WEAK_BISIM if weak else RelationKind.STRONG_BISIM
    iterations = partition.iterations
    return _verdict(kind, holds, counterexample, lhs, rhs, iterations, started)


def strong_bisim(lhs: Lts, rhs: Lts) -> Verdict:
    """Decide strong bisimilarity by partition refinement on the disjoint union."""
    return _bisim(lhs, rhs, weak=False)


def weak_bisim(lhs: Lts, rhs: Lts) -> Verdict:
    """Decide weak bisimilarity by refining the weakly saturated systems."""
    return _bisim(lhs, rhs, weak=True)


def _simulates(lhs: Lts, rhs: Lts, weak: bool) -> Tuple[bool, int]:
    """Greatest-fixpoint simulation check restricted to reachable pairs.

    Each pair keeps one counter per lhs move: the number of rhs answers that
    are still candidate pairs. A pair is pruned when any counter reaches zero,
    and pruning propagates to the pairs depending on it.
    """
    left = saturate(lhs, weak=False)
    right = saturate(rhs, weak=weak)
    answers: List[Dict[Label, List[int]]] = []
    for state in right.states:
        by_label: Dict[Label, List[int]] = {}
        for label, target in right.successors(state):
            by_label.setdefault(label, []).append(target)
        answers.append(by_label)

    root = (left.initial, right.initial)
    index: Dict[Tuple[int, int], int] = {root: 0}
    pairs = [root]
    counters: List[List[int]] = []
    dependents: List[List[Tuple[int, int]]] = [[]]
    worklist: List[int] = []

    position = 0
    while position < len(pairs):
        first, second = pairs[position]
        own: List[int] = []
        for label, target in left.successors(first):
            candidates = answers[second].get(label, ())
            own.append(len(candidates))
            if not candidates:
                worklist.append(position)
            for answer in candidates:
                candidate = (target, answer)
                if candidate not in index:
                    index[candidate] = len(pairs)
                    pairs.append(candidate)
                    dependents.append([])
                dependents[index[candidate]].append((position, len(own) - 1))
        counters.append(own)
        position += 1

    removed = [False] * len(pairs)
    pruned = 0
    while worklist:
        current = worklist.pop()
        if removed[current]:
            continue
        removed[current] = True
        pruned += 1
        for owner, move in dependents[current]:
            if removed[owner]:
                continue
            counters[owner][move] -= 1
            if counters[owner][move] == 0:
                worklist.append(owner)
    return not removed[0], pruned


def simulation(lhs: Lts, rhs: Lts, weak: bool = False) -> Verdict:
    """Decide whether ``rhs`` (weakly) simulates ``lhs``, i.e. ``lhs ⪯ rhs``."""
    started = time.perf_counter()
    holds, pruned = _simulates(lhs, rhs, weak)
    counterexample = None
    if not holds:
        counterexample, _ = _distinguishing_trace(lhs, rhs, TraceMode.INCL, weak)
    kind = RelationKind.WEAK_SIM if weak else RelationKind.STRONG_SIM
    return _verdict(kind, holds, counterexample, lhs, rhs, pruned, started)


class _Determinizer:
    """Lazy subset construction over completed-trace acceptance."""

    def __init__(self, lts: Lts, weak: bool) -> None:
        self.lts = lts
        self.weak = weak
        self._closure = tau_closure(lts) if weak else None
        self._moves: Dict[FrozenSet[int], Dict[Label, FrozenSet[int]]] = {}

    def _close(self, states: "set[int]") -> FrozenSet[int]:
        if self._closure is None:
            return frozenset(states)
        closed: "set[int]" = set()
        for state in states:
            closed.update(self._closure[state])
        return frozenset(closed)

    def start(self) -> FrozenSet[int]:
        return self._close({self.lts.initial})

    def accepts(self, subset: FrozenSet[int]) -> bool:
        return not subset.isdisjoint(self.lts.terminals)

    def moves(self, subset: FrozenSet[int]) -> Dict[Label, FrozenSet[int]]:
        cached = self._moves.get(subset)
        if cached is not None:
            return cached
        buckets: Dict[Label, "set[int]"] = {}
        for state in subset:
            for label, target in self.lts.successors(state):
                if self.weak and label.is_tau:
                    continue
                buckets.setdefault(label, set()).add(target)
        result = {label: self._close(targets) for label, targets in buckets.items()}
        self._moves[subset] = result
        return result


_EMPTY: FrozenSet[int] = frozenset()
_ProductNode = Tuple[FrozenSet[int], FrozenSet[int]]


def _distinguishing_trace(
    lhs: Lts, rhs: Lts, mode: TraceMode, weak: bool
) -> Tuple[Optional[Trace], int]:
    """Breadth-first product search for a shortest distinguishing trace.

    Labels are expanded in sorted order, so among the shortest witnesses the
    lexicographically smallest one is returned. In inclusion mode only traces
    completed by ``lhs`` and not by ``rhs`` count.
    """
    left, right = _Determinizer(lhs, weak), _Determinizer(rhs, weak)
    start = (left.start(), right.start())
    parents: Dict[_ProductNode, Optional[Tuple]] = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        first, second = node
        accepted_left, accepted_right = left.accepts(first), right.accepts(second)
        if accepted_left != accepted_right and (mode is TraceMode.EQ or accepted_left):
            return _rebuild(parents, node), len(parents)

        moves_left, moves_right = left.moves(first), right.moves(second)
        labels = set(moves_left)
        if mode is TraceMode.EQ:
            labels.update(moves_right)
        for label in sorted(labels, key=Label.sort_key):
            following = (moves_left.get(label, _EMPTY), moves_right.get(label, _EMPTY))
            if following in parents:
                continue
            parents[following] = (node, label)
            queue.append(following)
    return None, len(parents)


def _rebuild(parents: Dict, node: Tuple) -> Trace:
    labels: List[Label] = []
    link = parents[node]
    while link is not None:
        node, label = link
        labels.append(label)
        link = parents[node]
    return tuple(reversed(labels))


_TRACE_KINDS = {
    (TraceMode.EQ, False): RelationKind.TRACE_EQ,
    (TraceMode.INCL, False): RelationKind.TRACE_INCL,
    (TraceMode.EQ, True): RelationKind.WEAK_TRACE_EQ,
    (TraceMode.INCL, True): RelationKind.WEAK_TRACE_INCL,
}


def trace_relation(
    lhs: Lts, rhs: Lts, mode: TraceMode = TraceMode.INCL, weak: bool = False
) -> Verdict:
    """Decide completed-trace inclusion (``lhs ⊆ rhs``) or equality.

    In strong mode ``tau`` is treated as an ordinary action.
    """
    started = time.perf_counter()
    mode = TraceMode(mode)
    counterexample, explored = _distinguishing_trace(lhs, rhs, mode, weak)
    return _verdict(
        _TRACE_KINDS[(mode, weak)],
        counterexample is None,
        counterexample,
        lhs,
        rhs,
        explored,
        started,
    )


def check(lhs: Lts, rhs: Lts, kind: "RelationKind | str") -> Verdict:
    """Dispatch to the checker for ``kind`` and log the verdict."""
    kind = RelationKind(kind)
    if kind is RelationKind.STRONG_BISIM:
        verdict = strong_bisim(lhs, rhs)
    elif kind is RelationKind.WEAK_BISIM:
        verdict = weak_bisim(lhs, rhs)
    elif kind in (RelationKind.STRONG_SIM, RelationKind.WEAK_SIM):
        verdict = simulation(lhs, rhs, weak=kind.is_weak)
    else:
        mode = TraceMode.EQ if kind.value.endswith("-eq") else TraceMode.INCL
        verdict = trace_relation(lhs, rhs, mode, weak=kind.is_weak)
    logger.info(
        f"{kind.value}: holds={verdict.holds} "
        f"states={lhs.num_states},{rhs.num_states} "
        f"in {verdict.stats.elapsed_ms:.1f} ms"
    )
    return verdict

