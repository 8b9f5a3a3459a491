"""Tests for LNT emission."""

import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from src.attack_tree import AttackTree, load_tree
from src.gtdl import EngineWiring, PluginCall, PluginValuation, load_gtdl, parse_gtdl
from src.lnt import (
    emit_engine,
    emit_gtdl,
    emit_tree,
    lnt_identifier,
    normalise_whitespace,
)
from src.wiring import load_wiring

FIXTURES = Path(__file__).parent.parent.parent / "fixtures" / "lokibot"
GOLDEN = FIXTURES / "golden"


@pytest.fixture(scope="module")
def lokibot_rules():
    return {rule.name: rule for rule in load_gtdl(FIXTURES / "lokibot.gtdl")}


@pytest.fixture(scope="module")
def lokibot_channels():
    return load_wiring(FIXTURES / "lokibot.wiring.yaml").channels


def golden(name: str) -> str:
    return normalise_whitespace((GOLDEN / f"{name}.lnt").read_text(encoding="utf-8"))


class TestIdentifiers:
    @pytest.mark.parametrize(
        "name, expected",
        [
            ("lokiBotDet", "lokiBotDet"),
            ("Lokibot Incident Detected", "Lokibot_Incident_Detected"),
            ("%TEMP%", "TEMP"),
            ("1st", "X_1st"),
            ("", "X_"),
        ],
    )
    def test_sanitised(self, name: str, expected: str) -> None:
        assert lnt_identifier(name) == expected


class TestGoldenFiles:
    """Emitted LokiBot models match the reference sources token by token."""

    def test_tree(self) -> None:
        document = emit_tree(load_tree(FIXTURES / "lokibot.tree.yaml"))
        assert normalise_whitespace(document.text) == golden("LokibotTree")
        assert document.process_names[-1] == "LokibotTree"

    @pytest.mark.parametrize("rule_name", ["LokibotProcess", "LokibotIncident"])
    def test_rules(self, lokibot_rules, lokibot_channels, rule_name: str) -> None:
        document = emit_gtdl(lokibot_rules[rule_name], lokibot_channels)
        assert normalise_whitespace(document.text) == golden(rule_name)
        assert document.process_names == (rule_name,)


class TestEmitTree:
    def test_single_leaf(self) -> None:
        document = emit_tree(AttackTree.leaf("a"))
        assert document.process_names == ("LEAF_a",)
        assert "module LEAF_a is" in document.text

    def test_or_uses_select(self) -> None:
        tree = AttackTree.or_(AttackTree.leaf("a"), AttackTree.leaf("b"))
        document = emit_tree(tree, module="Choice")
        text = normalise_whitespace(document.text)
        assert (
            "process OR_root is select LEAF_a [a] [] LEAF_b [b] end select end process"
            in text
        )
        assert text.startswith("module Choice is")

    def test_shared_leaf_emitted_once(self) -> None:
        tree = AttackTree.and_(AttackTree.leaf("a"), AttackTree.leaf("a"))
        document = emit_tree(tree)
        assert document.process_names.count("LEAF_a") == 1
        assert document.text.count("process LEAF_a [a: any] is") == 1


class TestEmitGtdl:
    def test_locals_and_conditions(self) -> None:
        (rule,) = parse_gtdl(
            "[DETECTION] Detection_name = 'Local'\n[RULE]\n"
            "a = true;\nb = a;\n"
            "IF NOT a OR b == false THEN GlobalFlag.Set(\"X\"); END IF\n"
        )
        text = normalise_whitespace(emit_gtdl(rule).text)
        assert "process Local [X: FLAG_CHANNEL] is var a, b: Bool in" in text
        assert (
            "a := true; b := a; if not a or b == false then X (TRUE) end if end var"
            in text
        )

    def test_skip_body_is_null(self) -> None:
        (rule,) = parse_gtdl("[DETECTION] Detection_name = 'Idle'\n[RULE]\nskip\n")
        text = normalise_whitespace(emit_gtdl(rule).text)
        assert "process Idle is null end process" in text


class TestEmitEngine:
    def test_par_of_rules_with_actuals(self) -> None:
        rules = parse_gtdl(
            "[DETECTION] Detection_name = 'Writer'\n[RULE]\n"
            'v = inPluginCall(Check, "x");\nw = inPluginCall(Check, "y");\n'
            'IF v AND w THEN GlobalFlag.Set("F"); END IF\n'
            "[DETECTION] Detection_name = 'Reader'\n[RULE]\n"
            'f = GlobalFlag.IsSet("F");\nIF f THEN GlobalFlag.Set("G"); END IF\n'
        )
        wiring = EngineWiring(
            channels={"F": "chanF"},
            bindings=PluginValuation(plugins={PluginCall("Check", "x"): True}),
        )
        document = emit_engine(rules, wiring, name="Demo Engine")
        text = normalise_whitespace(document.text)
        assert document.process_names == ("Writer", "Reader", "Demo_Engine")
        assert "process Demo_Engine [chanF, G: FLAG_CHANNEL] is par" in text
        assert "Writer [chanF] (true, any Bool) || Reader [chanF, G] end par" in text

    def test_single_rule_without_par(self, lokibot_rules, lokibot_channels) -> None:
        wiring = EngineWiring(channels=lokibot_channels)
        document = emit_engine([lokibot_rules["LokibotCCAccess"]], wiring)
        text = normalise_whitespace(document.text)
        assert "par" not in text.split("process Engine", 1)[1]
        assert "LokibotCCAccess [lokiBotCCSet] (any Bool)" in text
