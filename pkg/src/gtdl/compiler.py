"""Compilation of GTDL rules and rule engines to transition systems.

A single rule branches silently over every valuation of its free inputs and
then follows the deterministic SOS run for that valuation. An engine runs its
rules in parallel: when a rule sets a flag, every rule waiting for that flag
through ``GlobalFlag.IsSet`` moves with it in the same transition.
"""

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..lts import TAU, Label, Lts, LtsBuilder, make_leaf, minimize, sequence, shuffle
from .ast import GtdlRule, PluginCall
from .errors import GtdlCompileError, GtdlWiringError
from .semantics import PluginValuation, initial_configuration, step

logger = logging.getLogger(__name__)


def rule_inputs(rule: GtdlRule) -> Tuple[Tuple[PluginCall, ...], Tuple[str, ...]]:
    """Plugin calls and flag reads of ``rule``, in source order."""
    return tuple(rule.plugin_calls()), tuple(rule.flag_reads())


@dataclass(frozen=True)
class InputUniverse:
    """The inputs a compilation may branch over, plus pinned values.

    Inputs bound in ``bindings`` are not branched over.
    """

    plugin_calls: FrozenSet[PluginCall] = frozenset()
    flags: FrozenSet[str] = frozenset()
    bindings: PluginValuation = field(default_factory=PluginValuation)

    @classmethod
    def covering(
        cls, rules: Iterable[GtdlRule], bindings: Optional[PluginValuation] = None
    ) -> "InputUniverse":
        calls: set = set()
        flags: set = set()
        for rule in rules:
            rule_calls, rule_flags = rule_inputs(rule)
            calls.update(rule_calls)
            flags.update(rule_flags)
        return cls(frozenset(calls), frozenset(flags), bindings or PluginValuation())


@dataclass(frozen=True)
class EngineWiring:
    """How the rules of an engine are connected.

    Attributes:
        channels: Flag name to observable action; unlisted flags use their
            own name.
        bindings: Pinned plugin and flag values.
        externals: Flags set outside the engine, read as free inputs.
    """

    channels: Mapping[str, str] = field(default_factory=dict)
    bindings: PluginValuation = field(default_factory=PluginValuation)
    externals: FrozenSet[str] = frozenset()

    def channel(self, flag: str) -> Label:
        return Label.observable(self.channels.get(flag, flag))


def rule_to_lts(
    rule: GtdlRule,
    universe: Optional[InputUniverse] = None,
    channels: Optional[Mapping[str, str]] = None,
) -> Lts:
    """Compile one rule.

    Every valuation of the free inputs gets its own silent branch from the
    initial state; without free inputs the single run starts at the initial
    state. Each branch ends in a terminal state, whether or not a flag was set.

    Raises:
        GtdlCompileError: If ``universe`` misses one of the rule's inputs.
    """
    universe = universe or InputUniverse.covering([rule])
    channels = channels or {}
    calls, flags = rule_inputs(rule)
    missing = [str(call) for call in calls if call not in universe.plugin_calls]
    missing += [f"IsSet('{flag}')" for flag in flags if flag not in universe.flags]
    if missing:
        raise GtdlCompileError(
            f"input universe does not cover {', '.join(missing)} of rule '{rule.name}'"
        )

    free_calls = [call for call in calls if call not in universe.bindings.plugins]
    free_flags = [flag for flag in flags if flag not in universe.bindings.flags]
    free_count = len(free_calls) + len(free_flags)

    builder = LtsBuilder()
    root = builder.add_state()
    for values in itertools.product((True, False), repeat=free_count):
        valuation = universe.bindings.merged(
            PluginValuation(
                plugins=dict(zip(free_calls, values[: len(free_calls)])),
                flags=dict(zip(free_flags, values[len(free_calls) :])),
            )
        )
        state = root
        if free_count:
            state = builder.add_state()
            builder.add_transition(root, TAU, state)
        config = initial_configuration(rule)
        while not config.is_halted:
            taken = step(config, valuation)
            label = taken.label
            if not label.is_tau and label.name is not None:
                label = Label.observable(channels.get(label.name, label.name))
            target = builder.add_state()
            builder.add_transition(state, label, target)
            state, config = target, taken.target
        builder.mark_terminal(state)

    lts = builder.build(root)
    logger.debug(
        f"Compiled rule '{rule.name}' over {free_count} free inputs "
        f"into {lts.num_states} states"
    )
    return lts


@dataclass(frozen=True)
class _Component:
    name: str
    lts: Lts
    listens: FrozenSet[Label]


def _check_wiring(
    rules: Sequence[GtdlRule], wiring: EngineWiring
) -> Dict[str, List[str]]:
    writers: Dict[str, List[str]] = {}
    for rule in rules:
        for flag in rule.flags_set():
            writers.setdefault(flag, []).append(rule.name)

    owners: Dict[Label, str] = {}
    for rule in rules:
        for flag in list(rule.flags_set()) + list(rule.flag_reads()):
            channel = wiring.channel(flag)
            owner = owners.setdefault(channel, flag)
            if owner != flag:
                raise GtdlWiringError(
                    f"flags '{owner}' and '{flag}' share channel '{channel}'"
                )

    for rule in rules:
        for flag in rule.flag_reads():
            if flag in rule.flags_set():
                raise GtdlWiringError(
                    f"rule '{rule.name}' reads flag '{flag}' it sets itself"
                )
            declared = flag in wiring.externals or flag in wiring.bindings.flags
            if flag in writers or declared:
                continue
            raise GtdlWiringError(
                f"rule '{rule.name}' reads flag '{flag}' that no rule sets "
                f"and that is not declared external"
            )
    return writers


def _component(
    rule: GtdlRule, wiring: EngineWiring, writers: Mapping[str, List[str]], reduce: bool
) -> _Component:
    _, flags = rule_inputs(rule)
    pinned = wiring.bindings.flags
    awaited = [flag for flag in flags if flag in writers and flag not in pinned]
    awaited_values = PluginValuation(flags={flag: True for flag in awaited})
    bindings = wiring.bindings.merged(awaited_values)
    universe = InputUniverse.covering([rule], bindings=bindings)
    body = rule_to_lts(rule, universe, channels=wiring.channels)
    if not awaited:
        reduced = minimize(body, "weak") if reduce else body
        return _Component(rule.name, reduced, frozenset())
    listens = [wiring.channel(flag) for flag in awaited]
    waiting = shuffle([make_leaf(label) for label in listens])
    combined = sequence([waiting, body])
    # A rule still waiting when the engine falls quiet finishes without
    # detecting. The waiting states keep their ids in the sequence.
    idle = frozenset(
        state for state in waiting.states if state not in waiting.terminals
    )
    terminals = combined.terminals | idle
    lts = Lts(combined.num_states, combined.initial, combined.transitions, terminals)
    return _Component(rule.name, lts, frozenset(listens))


def _compose(components: Sequence[_Component]) -> Lts:
    """Product of the components with writer-driven broadcast on flag channels.

    Listen transitions never fire on their own. When a component emits a
    label, every other component currently able to listen for it moves too;
    components that cannot listen yet stay where they are.
    """
    listeners: Dict[Label, List[int]] = {}
    for position, component in enumerate(components):
        for label in component.listens:
            listeners.setdefault(label, []).append(position)

    builder = LtsBuilder()
    start = tuple(component.lts.initial for component in components)
    index = {start: builder.add_state()}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        source = index[current]
        if all(state in c.lts.terminals for state, c in zip(current, components)):
            builder.mark_terminal(source)
        for position, component in enumerate(components):
            for label, target in component.lts.successors(current[position]):
                if label in component.listens:
                    continue
                variants = [current[:position] + (target,) + current[position + 1 :]]
                for other in listeners.get(label, ()):
                    if other == position:
                        continue
                    offered = components[other].lts.successors(current[other])
                    answers = [
                        following for heard, following in offered if heard == label
                    ]
                    if answers:
                        variants = [
                            variant[:other] + (answer,) + variant[other + 1 :]
                            for variant in variants
                            for answer in answers
                        ]
                for following in variants:
                    if following not in index:
                        index[following] = builder.add_state()
                        queue.append(following)
                    builder.add_transition(source, label, index[following])
    return builder.build(index[start])


def engine_to_lts(
    rules: Sequence[GtdlRule],
    wiring: Optional[EngineWiring] = None,
    loop_bound: int = 1,
    reduce: bool = True,
) -> Lts:
    """Compile a rule engine running ``rules`` in parallel.

    Args:
        rules: The detection rules of the engine.
        wiring: Channels, pinned values and external flags.
        loop_bound: Number of engine rounds, glued sequentially.
        reduce: Weakly minimise rules that read no engine flag before
            composing them.

    Raises:
        GtdlWiringError: On dangling flag reads, channel clashes and rules
            reading a flag they set.
        ValueError: If ``loop_bound`` is below 1.
    """
    if loop_bound < 1:
        raise ValueError(f"loop bound must be at least 1, got {loop_bound}")
    if not rules:
        raise GtdlWiringError("an engine needs at least one rule")
    wiring = wiring or EngineWiring()
    writers = _check_wiring(rules, wiring)
    components = [_component(rule, wiring, writers, reduce) for rule in rules]
    round_lts = _compose(components)
    logger.info(
        f"Composed engine of {len(rules)} rules into {round_lts.num_states} states, "
        f"{round_lts.num_transitions} transitions"
    )
    if loop_bound == 1:
        return round_lts
    return sequence([round_lts] * loop_bound)
