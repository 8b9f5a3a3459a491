"""Tests for the LTS core: construction, compositions, traces and saturation."""

import math
import os
import random
import sys
from itertools import permutations

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from src.equivalence import RelationKind, check
from src.lts import (
    TAU,
    TICK,
    Label,
    Lts,
    LtsBuilder,
    LtsError,
    as_names,
    check_acyclic,
    choice,
    dump_lts,
    enumerate_traces,
    format_trace,
    load_lts,
    make_leaf,
    minimize,
    saturate,
    sequence,
    shuffle,
    tau_closure,
)


def random_acyclic_lts(rng: random.Random, num_states: int = 6) -> Lts:
    """Edges only go from lower to higher ids, so the result is acyclic."""
    builder = LtsBuilder()
    for _ in range(num_states):
        builder.add_state()
    for source in range(num_states - 1):
        for target in range(source + 1, num_states):
            if rng.random() < 0.35:
                label = TAU if rng.random() < 0.25 else Label(rng.choice("abc"))
                builder.add_transition(source, label, target)
    builder.mark_terminal(num_states - 1)
    return builder.build(0)


def random_cyclic_lts(rng: random.Random, num_states: int = 6) -> Lts:
    builder = LtsBuilder()
    for _ in range(num_states):
        builder.add_state(terminal=rng.random() < 0.3)
    for _ in range(2 * num_states):
        label = TAU if rng.random() < 0.25 else Label(rng.choice("abc"))
        source, target = rng.randrange(num_states), rng.randrange(num_states)
        builder.add_transition(source, label, target)
    return builder.build(0)


def bisimilar(first: Lts, second: Lts) -> bool:
    return check(first, second, RelationKind.STRONG_BISIM).holds


class TestLabel:
    """Observable and silent labels."""

    def test_tau_is_silent(self) -> None:
        assert TAU.is_tau
        assert str(TAU) == "tau"

    def test_observable_label(self) -> None:
        label = Label.observable("flag_a")
        assert not label.is_tau
        assert str(label) == "flag_a"

    @pytest.mark.parametrize("name", ["tau", "â"])
    def test_reserved_names_rejected(self, name: str) -> None:
        with pytest.raises(LtsError):
            Label.observable(name)

    def test_empty_name_rejected(self) -> None:
        with pytest.raises(LtsError):
            Label("")

    def test_tau_sorts_first(self) -> None:
        labels = [Label("b"), TAU, Label("a")]
        assert sorted(labels, key=Label.sort_key) == [TAU, Label("a"), Label("b")]


class TestLtsConstruction:
    """Validation and convenience views of Lts."""

    def test_out_of_range_initial(self) -> None:
        with pytest.raises(LtsError) as exc_info:
            Lts(2, 5, frozenset())
        assert exc_info.value.state == 5

    def test_out_of_range_transition(self) -> None:
        with pytest.raises(LtsError):
            Lts(2, 0, frozenset({(0, Label("a"), 7)}))

    def test_needs_a_state(self) -> None:
        with pytest.raises(LtsError):
            Lts(0, 0, frozenset())

    def test_builder_collapses_duplicates(self) -> None:
        builder = LtsBuilder()
        first, second = builder.add_state(), builder.add_state(terminal=True)
        builder.add_transition(first, Label("a"), second)
        builder.add_transition(first, Label("a"), second)
        lts = builder.build(first)
        assert lts.num_transitions == 1
        assert lts.terminals == frozenset({second})

    def test_alphabet_excludes_tau(self) -> None:
        lts = Lts(3, 0, frozenset({(0, TAU, 1), (1, Label("a"), 2)}), frozenset({2}))
        assert lts.alphabet == frozenset({Label("a")})
        assert not lts.is_tau_free

    def test_reachable_drops_orphans(self) -> None:
        edges = {(0, Label("a"), 1), (2, Label("b"), 3)}
        lts = Lts(4, 0, frozenset(edges), frozenset({1, 3}))
        trimmed = lts.reachable()
        assert trimmed.num_states == 2
        assert trimmed.terminals == frozenset({1})


class TestCompositions:
    """choice, shuffle and sequence against their trace semantics."""

    def test_leaf(self) -> None:
        leaf = make_leaf("a")
        assert leaf.num_states == 2
        assert as_names(enumerate_traces(leaf)) == {("a",)}

    def test_silent_leaf_rejected(self) -> None:
        with pytest.raises(LtsError):
            make_leaf(TAU)

    def test_choice_glues_initials(self) -> None:
        lts = choice([make_leaf("a"), make_leaf("b"), make_leaf("c")])
        assert lts.num_states == 4
        assert lts.is_tau_free
        assert as_names(enumerate_traces(lts)) == {("a",), ("b",), ("c",)}

    @pytest.mark.parametrize("n", range(1, 8))
    def test_shuffle_of_distinct_leaves(self, n: int) -> None:
        actions = [f"a{i}" for i in range(n)]
        lts = shuffle([make_leaf(action) for action in actions])
        assert lts.num_states == 2**n
        traces = as_names(enumerate_traces(lts))
        assert len(traces) == math.factorial(n)
        assert traces == set(permutations(actions))

    def test_shuffle_terminal_needs_every_component(self) -> None:
        lts = shuffle([make_leaf("a"), make_leaf("b")])
        assert len(lts.terminals) == 1

    def test_sequence_single_exit(self) -> None:
        lts = sequence([make_leaf("a"), make_leaf("b"), make_leaf("c")])
        assert lts.num_states == 4
        assert as_names(enumerate_traces(lts)) == {("a", "b", "c")}

    def test_sequence_after_choice_copies_moves_to_every_exit(self) -> None:
        lts = sequence([choice([make_leaf("a"), make_leaf("b")]), make_leaf("c")])
        assert lts.is_tau_free
        assert as_names(enumerate_traces(lts)) == {("a", "c"), ("b", "c")}

    def test_sequence_of_shuffles(self) -> None:
        first = shuffle([make_leaf("a"), make_leaf("b")])
        lts = sequence([first, make_leaf("c")])
        assert as_names(enumerate_traces(lts)) == {("a", "b", "c"), ("b", "a", "c")}

    @pytest.mark.parametrize("operator", [choice, shuffle, sequence])
    def test_empty_parts_rejected(self, operator) -> None:
        with pytest.raises(LtsError):
            operator([])


class TestCompositionLaws:
    """Algebraic laws of the operators, up to strong bisimilarity."""

    @pytest.fixture(params=range(15))
    def parts(self, request):
        rng = random.Random(request.param)
        return [random_acyclic_lts(rng, rng.randint(2, 5)) for _ in range(3)]

    @pytest.mark.parametrize("operator", [choice, shuffle])
    def test_commutative(self, operator, parts) -> None:
        first, second, _ = parts
        assert bisimilar(operator([first, second]), operator([second, first]))

    @pytest.mark.parametrize("operator", [choice, shuffle, sequence])
    def test_associative(self, operator, parts) -> None:
        first, second, third = parts
        left = operator([operator([first, second]), third])
        right = operator([first, operator([second, third])])
        assert bisimilar(left, right)
        assert bisimilar(left, operator([first, second, third]))

    def test_choice_idempotent(self, parts) -> None:
        assert bisimilar(choice([parts[0], parts[0]]), parts[0])

    def test_sequence_traces_concatenate(self, parts) -> None:
        first, second, _ = parts
        expected = {
            head + tail
            for head in enumerate_traces(first)
            for tail in enumerate_traces(second)
        }
        assert enumerate_traces(sequence([first, second])) == expected


class TestTraces:
    """Acyclicity checks and trace enumeration."""

    def test_cycle_detected(self) -> None:
        edges = {(0, Label("a"), 1), (1, Label("b"), 0)}
        lts = Lts(2, 0, frozenset(edges), frozenset({1}))
        with pytest.raises(LtsError) as exc_info:
            enumerate_traces(lts)
        assert exc_info.value.state in (0, 1)

    def test_topological_order(self) -> None:
        lts = sequence([make_leaf("a"), make_leaf("b")])
        order = check_acyclic(lts)
        assert order[0] == lts.initial

    def test_weak_traces_erase_tau(self) -> None:
        lts = Lts(3, 0, frozenset({(0, TAU, 1), (1, Label("a"), 2)}), frozenset({2}))
        assert as_names(enumerate_traces(lts)) == {("tau", "a")}
        assert as_names(enumerate_traces(lts, weak=True)) == {("a",)}

    def test_format_trace(self) -> None:
        assert format_trace([]) == "eps"
        assert format_trace([Label("a"), Label("b")]) == "a.b"


class TestSaturation:
    """Weak transitions and tau closure."""

    @pytest.fixture
    def silent_prefix(self) -> Lts:
        return Lts(3, 0, frozenset({(0, TAU, 1), (1, Label("a"), 2)}), frozenset({2}))

    def test_tau_closure(self, silent_prefix: Lts) -> None:
        closure = tau_closure(silent_prefix)
        assert closure[0] == frozenset({0, 1})
        assert closure[2] == frozenset({2})

    def test_strong_saturation_adds_tick(self, silent_prefix: Lts) -> None:
        saturated = saturate(silent_prefix, weak=False)
        assert saturated.num_states == 4
        assert (2, TICK, 3) in saturated.transitions
        assert (0, TAU, 1) in saturated.transitions

    def test_weak_saturation(self, silent_prefix: Lts) -> None:
        saturated = saturate(silent_prefix, weak=True)
        assert (0, Label("a"), 2) in saturated.transitions
        assert (0, TAU, 0) in saturated.transitions
        assert (2, TICK, 3) in saturated.transitions
        assert (0, TICK, 3) not in saturated.transitions


class TestMinimize:
    """Quotients under strong and weak bisimilarity."""

    def test_identical_leaves_collapse(self) -> None:
        lts = shuffle([make_leaf("a") for _ in range(4)])
        assert lts.num_states == 16
        assert minimize(lts, "strong").num_states == 5

    def test_weak_minimisation_drops_silent_steps(self) -> None:
        edges = {(0, TAU, 1), (1, TAU, 2), (2, Label("a"), 3)}
        lts = Lts(4, 0, frozenset(edges), frozenset({3}))
        reduced = minimize(lts, "weak")
        assert reduced.num_states == 2
        assert reduced.is_tau_free

    def test_unknown_relation(self) -> None:
        with pytest.raises(LtsError):
            minimize(make_leaf("a"), "branching")

    @pytest.mark.parametrize("seed", range(8))
    def test_minimisation_preserves_traces(self, seed: int) -> None:
        lts = random_acyclic_lts(random.Random(seed))
        assert enumerate_traces(minimize(lts, "strong")) == enumerate_traces(lts)
        assert enumerate_traces(minimize(lts, "weak"), weak=True) == enumerate_traces(
            lts, weak=True
        )

    @pytest.mark.parametrize("seed", range(20))
    @pytest.mark.parametrize("cyclic", [False, True])
    def test_quotients_are_bisimilar(self, seed: int, cyclic: bool) -> None:
        rng = random.Random(seed)
        lts = random_cyclic_lts(rng) if cyclic else random_acyclic_lts(rng)
        strong, weak = minimize(lts, "strong"), minimize(lts, "weak")
        assert check(strong, lts, RelationKind.STRONG_BISIM).holds
        assert check(weak, lts, RelationKind.WEAK_BISIM).holds
        assert weak.num_states <= strong.num_states <= lts.num_states


class TestInterchange:
    """Plain-text dump format."""

    def test_dump_format(self) -> None:
        text = dump_lts(make_leaf("a"))
        assert text.splitlines() == ["lts 2 1 0", "0 a 1", "terminal 1"]

    def test_round_trip_with_spaces_and_tau(self) -> None:
        lts = Lts(
            3,
            0,
            frozenset({(0, TAU, 1), (1, Label("Lokibot Incident Detected"), 2)}),
            frozenset({2}),
        )
        assert load_lts(dump_lts(lts)) == lts

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "graph 2 1 0\n0 a 1\nterminal 1\n",
            "lts 2 2 0\n0 a 1\nterminal 1\n",
            "lts 2 1 0\n0 a\nterminal 1\n",
            "lts 2 1 0\n0 a 1\n",
        ],
    )
    def test_malformed_dumps(self, text: str) -> None:
        with pytest.raises(LtsError):
            load_lts(text)

    def test_tick_label_rejected(self) -> None:
        with pytest.raises(LtsError):
            load_lts("lts 2 1 0\n0 √ 1\nterminal 1\n")

    def test_comment_and_blank_lines_skipped(self) -> None:
        text = "# states=2 transitions=1\nlts 2 1 0\n\n0 a 1\n  # done\nterminal 1\n"
        assert load_lts(text) == make_leaf("a")
