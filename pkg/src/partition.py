"""Signature-based partition refinement for bisimulation checking."""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, List, Optional, Sequence, Tuple

from .lts import Label, Lts

logger = logging.getLogger(__name__)


@dataclass
class Partition:
    """Result of a refinement run.

    Attributes:
        blocks: Block id of every state, indexed by state.
        num_blocks: Number of distinct blocks.
        iterations: Refinement rounds performed, including the final stable one.
    """

    blocks: List[int]
    num_blocks: int
    iterations: int

    def same_block(self, first: int, second: int) -> bool:
        return self.blocks[first] == self.blocks[second]


Signature = Tuple[int, FrozenSet[Tuple[Label, int]]]


def refine(lts: Lts, initial_blocks: Optional[Sequence[Hashable]] = None) -> Partition:
    """Compute the coarsest stable partition of ``lts``.

    Each round gives every state the signature ``(block, {(label, block')})``
    and renumbers blocks by first occurrence of their signature. Because the
    old block is part of the signature, rounds only ever split blocks, and
    the loop stops as soon as a round does not increase the block count.

    Args:
        lts: The transition system, usually already saturated.
        initial_blocks: Optional starting classification, one entry per state.

    Returns:
        The stable partition together with the number of rounds.
    """
    successors = [lts.successors(state) for state in lts.states]
    if initial_blocks is None:
        blocks = [0] * lts.num_states
    else:
        if len(initial_blocks) != lts.num_states:
            raise ValueError("initial_blocks needs one entry per state")
        renumber: Dict[Hashable, int] = {}
        blocks = [renumber.setdefault(key, len(renumber)) for key in initial_blocks]
    num_blocks = len(set(blocks))

    iterations = 0
    while True:
        iterations += 1
        signatures: Dict[Signature, int] = {}
        refined = [0] * lts.num_states
        for state in lts.states:
            signature = (
                blocks[state],
                frozenset(
                    (label, blocks[target]) for label, target in successors[state]
                ),
            )
            refined[state] = signatures.setdefault(signature, len(signatures))
        stable = len(signatures) == num_blocks
        blocks, num_blocks = refined, len(signatures)
        if stable:
            break

    logger.debug(
        f"Refined {lts.num_states} states into {num_blocks} blocks"
        f" in {iterations} rounds"
    )
    return Partition(blocks, num_blocks, iterations)
