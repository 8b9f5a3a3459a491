"""Parametric benchmark families and the benchmark runner.

Each family pairs an attack tree over ``n`` leaves ``detectionFlag<i>`` with a
detection engine of rules ``SignatureDetectionFlag<i>``:

* AndOnly: AND of all leaves, one unconditional signature per leaf.
* AndNonDet: like AndOnly but the last leaf repeats ``detectionFlag1``.
* SandOnly: SAND chain; signature ``i`` waits for flag ``i - 1``.
* OrOnly: OR of all leaves; every signature is guarded by a plugin call.
* AndOr: AND over two OR nodes of three leaves each plus free leaves.
* AndSand: AND over two SAND nodes of three leaves each plus free leaves.

For AndOr and AndSand ``n`` counts all leaves, so ``n >= 6``.
"""

import logging
import multiprocessing
import pickle
import queue
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, model_validator

from .attack_tree import AttackTree, tree_to_lts
from .equivalence import RelationKind, check
from .gtdl.ast import (
    SKIP_BLOCK,
    Assign,
    Block,
    FlagIsSet,
    GtdlRule,
    If,
    PluginCall,
    SetFlag,
    Var,
)
from .gtdl.compiler import engine_to_lts
from .lts import Lts, minimize

logger = logging.getLogger(__name__)

GROUP_SIZE = 3


class Family(str, Enum):
    AND_ONLY = "AndOnly"
    AND_NONDET = "AndNonDet"
    SAND_ONLY = "SandOnly"
    OR_ONLY = "OrOnly"
    AND_OR = "AndOr"
    AND_SAND = "AndSand"


# Relation of the ``Obs.`` column per family. AndSand is checked with the
# simulation preorder. OR-based engines resolve plugin inputs silently, so
# weak bisimilarity with their trees fails and simulation is used instead.
OBSERVATIONAL: Dict[Family, RelationKind] = {
    Family.AND_ONLY: RelationKind.WEAK_BISIM,
    Family.AND_NONDET: RelationKind.WEAK_BISIM,
    Family.SAND_ONLY: RelationKind.WEAK_BISIM,
    Family.AND_SAND: RelationKind.WEAK_SIM,
    Family.OR_ONLY: RelationKind.WEAK_SIM,
    Family.AND_OR: RelationKind.WEAK_SIM,
}
WEAK_TRACE = RelationKind.WEAK_TRACE_INCL
MIN_LEAVES = {Family.AND_OR: 2 * GROUP_SIZE, Family.AND_SAND: 2 * GROUP_SIZE}


def default_relations(family: Family) -> List[RelationKind]:
    return [OBSERVATIONAL[family], WEAK_TRACE]


def column_label(relation: RelationKind) -> str:
    """Table heading for a relation: ``Wktrc.`` for weak traces, else ``Obs.``."""
    weak_traces = (RelationKind.WEAK_TRACE_INCL, RelationKind.WEAK_TRACE_EQ)
    return "Wktrc." if relation in weak_traces else "Obs."


class BenchCase(BaseModel):
    family: Family
    leaves: int = Field(..., ge=1)
    relations: List[RelationKind] = Field(default_factory=list)
    direction: Literal["tree-engine", "engine-tree"] = "tree-engine"

    @model_validator(mode="after")
    def _check_shape(self) -> "BenchCase":
        minimum = MIN_LEAVES.get(self.family, 1)
        if self.leaves < minimum:
            raise ValueError(
                f"{self.family.value} needs at least {minimum} leaves, "
                f"got {self.leaves}"
            )
        if not self.relations:
            self.relations = default_relations(self.family)
        return self


class BenchResult(BaseModel):
    """One measurement.

    ``millis`` covers compiling both sides and checking them; ``check_millis``
    covers the check alone. Both are medians over the repetitions.
    """

    family: Family
    leaves: int
    relation: RelationKind
    millis: float
    states_lhs: int
    states_rhs: int
    verdict: Literal["holds", "fails", "timeout", "error"]
    states_lhs_min: Optional[int] = None
    states_rhs_min: Optional[int] = None
    repetitions: int = 1
    check_millis: Optional[float] = None

    def to_row(self) -> Dict[str, Any]:
        row = self.model_dump()
        row["family"] = self.family.value
        row["relation"] = self.relation.value
        return row


# generators


def flag(index: int) -> str:
    return f"detectionFlag{index}"


def _signature_name(index: int) -> str:
    return f"SignatureDetectionFlag{index}"


def unconditional_rule(index: int, flag_name: str) -> GtdlRule:
    body = Block((), SetFlag(flag_name))
    return GtdlRule(_signature_name(index), body, apply_when="Event")


def guarded_rule(index: int, flag_name: str) -> GtdlRule:
    observe = Assign("observed", PluginCall("IsEventObserved", flag_name))
    detect = Block((), SetFlag(flag_name))
    body = Block((observe,), If(Var("observed"), detect, SKIP_BLOCK))
    return GtdlRule(_signature_name(index), body, apply_when="Event")


def following_rule(index: int, flag_name: str, previous: str) -> GtdlRule:
    wait = Assign("previous", FlagIsSet(previous))
    detect = Block((), SetFlag(flag_name))
    body = Block((wait,), If(Var("previous"), detect, SKIP_BLOCK))
    return GtdlRule(_signature_name(index), body, apply_when="GlobalFlags")


_OPERATORS = {"and": AttackTree.and_, "or": AttackTree.or_, "sand": AttackTree.sand}


def _combine(kind: str, children: List[AttackTree]) -> AttackTree:
    if len(children) == 1:
        return children[0]
    return _OPERATORS[kind](*children)


def generate(case: BenchCase) -> Tuple[AttackTree, List[GtdlRule]]:
    """Build the attack tree and detection rules of ``case``."""
    n = case.leaves
    indices = list(range(1, n + 1))
    leaves = [AttackTree.leaf(flag(i)) for i in indices]
    family = case.family

    if family is Family.AND_ONLY:
        rules = [unconditional_rule(i, flag(i)) for i in indices]
        return _combine("and", leaves), rules

    if family is Family.AND_NONDET:
        flags = [flag(i) for i in indices[:-1]] + [flag(1)]
        tree = _combine("and", [AttackTree.leaf(name) for name in flags])
        return tree, [unconditional_rule(i, name) for i, name in zip(indices, flags)]

    if family is Family.SAND_ONLY:
        rules = [unconditional_rule(1, flag(1))]
        rules += [following_rule(i, flag(i), flag(i - 1)) for i in indices[1:]]
        return _combine("sand", leaves), rules

    if family is Family.OR_ONLY:
        return _combine("or", leaves), [guarded_rule(i, flag(i)) for i in indices]

    groups = [leaves[:GROUP_SIZE], leaves[GROUP_SIZE : 2 * GROUP_SIZE]]
    free = leaves[2 * GROUP_SIZE :]
    if family is Family.AND_OR:
        tree = _combine("and", [_combine("or", group) for group in groups] + free)
        rules = [guarded_rule(i, flag(i)) for i in indices[: 2 * GROUP_SIZE]]
    else:
        tree = _combine("and", [_combine("sand", group) for group in groups] + free)
        rules = []
        for start in (1, 1 + GROUP_SIZE):
            rules.append(unconditional_rule(start, flag(start)))
            rules += [
                following_rule(i, flag(i), flag(i - 1))
                for i in range(start + 1, start + GROUP_SIZE)
            ]
    rules += [unconditional_rule(i, flag(i)) for i in indices[2 * GROUP_SIZE :]]
    return tree, rules


def build_pair(case: BenchCase) -> Tuple[Lts, Lts]:
    """Compile ``case`` to the ``(lhs, rhs)`` pair in the configured direction."""
    tree, rules = generate(case)
    tree_lts, engine_lts = tree_to_lts(tree), engine_to_lts(rules)
    if case.direction == "engine-tree":
        return engine_lts, tree_lts
    return tree_lts, engine_lts


# isolation


POLL_SECS = 0.2


class CheckTimeout(Exception):
    """Raised when an isolated computation exceeds its time budget."""


class WorkerError(RuntimeError):
    """Raised when a worker process ends without reporting a result."""


def _isolated(channel: Any, func: Callable[..., Any], args: Tuple[Any, ...]) -> None:
    try:
        channel.put(("ok", func(*args)))
    except Exception as e:
        try:
            pickle.dumps(e)
        except Exception:
            e = WorkerError(f"{type(e).__name__}: {e}")
        channel.put(("error", e))


def _await_answer(
    channel: Any, worker: "multiprocessing.process.BaseProcess", timeout_secs: float
) -> Tuple[str, Any]:
    deadline = time.monotonic() + timeout_secs
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            worker.terminate()
            worker.join()
            raise CheckTimeout(f"no answer after {timeout_secs:g} s")
        try:
            return channel.get(timeout=min(remaining, POLL_SECS))
        except queue.Empty:
            if worker.is_alive():
                continue
        # The worker has exited; anything it posted is still in the pipe.
        try:
            return channel.get(timeout=POLL_SECS)
        except queue.Empty:
            worker.join()
            raise WorkerError(
                f"worker exited with code {worker.exitcode} without a result"
            ) from None


def run_with_timeout(
    func: Callable[..., Any], args: Tuple[Any, ...], timeout_secs: Optional[float]
) -> Any:
    """Run ``func(*args)`` in a worker process, killing it after ``timeout_secs``.

    Without a timeout the call runs in the current process. Exceptions raised
    by ``func`` are re-raised here; an exception that cannot be sent back is
    replaced by a :class:`WorkerError` carrying its message.

    Raises:
        CheckTimeout: If the worker does not answer in time.
        WorkerError: If the worker dies without answering.
    """
    if timeout_secs is None:
        return func(*args)
    context = multiprocessing.get_context()
    channel = context.Queue()
    worker = context.Process(target=_isolated, args=(channel, func, args), daemon=True)
    worker.start()
    status, payload = _await_answer(channel, worker, timeout_secs)
    worker.join()
    if status == "error":
        raise payload
    return payload


# measurement


def measure(
    case: BenchCase, relation: RelationKind, repetitions: int = 3
) -> BenchResult:
    """Compile and check ``case`` and report median wall-clock times.

    Every repetition compiles both sides afresh, so ``millis`` includes the
    translation and composition work as well as the check.
    """
    totals: List[float] = []
    checks: List[float] = []
    for _ in range(max(1, repetitions)):
        started = time.perf_counter()
        lhs, rhs = build_pair(case)
        compiled = time.perf_counter()
        verdict = check(lhs, rhs, relation)
        finished = time.perf_counter()
        totals.append((finished - started) * 1000.0)
        checks.append((finished - compiled) * 1000.0)
    return BenchResult(
        family=case.family,
        leaves=case.leaves,
        relation=relation,
        millis=statistics.median(totals),
        states_lhs=lhs.num_states,
        states_rhs=rhs.num_states,
        verdict="holds" if verdict.holds else "fails",
        states_lhs_min=minimize(lhs, "strong").num_states,
        states_rhs_min=minimize(rhs, "strong").num_states,
        repetitions=len(totals),
        check_millis=statistics.median(checks),
    )


def _unfinished(
    case: BenchCase,
    relation: RelationKind,
    verdict: Literal["timeout", "error"],
    millis: float,
) -> BenchResult:
    return BenchResult(
        family=case.family,
        leaves=case.leaves,
        relation=relation,
        millis=millis,
        states_lhs=0,
        states_rhs=0,
        verdict=verdict,
        repetitions=0,
    )


def _measure_isolated(
    case: BenchCase,
    relation: RelationKind,
    repetitions: int,
    timeout_secs: Optional[float],
) -> BenchResult:
    label = f"{case.family.value} n={case.leaves} {relation.value}"
    try:
        result = run_with_timeout(measure, (case, relation, repetitions), timeout_secs)
    except CheckTimeout:
        logger.warning(f"{label} timed out after {timeout_secs:g} s")
        return _unfinished(case, relation, "timeout", (timeout_secs or 0.0) * 1000.0)
    except WorkerError as e:
        logger.error(f"{label} failed: {e}")
        return _unfinished(case, relation, "error", 0.0)
    logger.info(
        f"{label}: {result.verdict} in {result.millis:.1f} ms "
        f"(states {result.states_lhs}/{result.states_rhs})"
    )
    return result


def run(
    cases: Sequence[BenchCase],
    repetitions: int = 3,
    timeout_secs: Optional[float] = 7200.0,
    workers: int = 1,
    on_result: Optional[Callable[[BenchResult], None]] = None,
) -> List[BenchResult]:
    """Measure every relation of every case; timeouts are recorded, not raised.

    With ``workers > 1`` several isolated measurements run concurrently.
    ``on_result`` sees each result in job order as soon as it is available.
    """
    jobs = [(case, relation) for case in cases for relation in case.relations]
    logger.info(f"Running {len(jobs)} benchmark checks with {repetitions} repetitions")
    results: List[BenchResult] = []

    def collect(result: BenchResult) -> None:
        results.append(result)
        if on_result is not None:
            on_result(result)

    if workers > 1 and timeout_secs is not None:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(
                lambda job: _measure_isolated(*job, repetitions, timeout_secs), jobs
            ):
                collect(result)
    else:
        for case, relation in jobs:
            collect(_measure_isolated(case, relation, repetitions, timeout_secs))
    return results


def parse_leaves(text: str) -> List[int]:
    """Parse a leaf-count list such as ``1-10,15``."""
    counts: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            low, high = (int(value) for value in part.split("-", 1))
            if low > high:
                raise ValueError(f"empty leaf range '{part}'")
            counts.extend(range(low, high + 1))
        else:
            counts.append(int(part))
    if not counts or any(count < 1 for count in counts):
        raise ValueError(f"invalid leaf list '{text}'")
    return counts
