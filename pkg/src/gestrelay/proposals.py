"""Reorder-proposal engine for the survival task.

Main path: among items the participant has not declined and that sit away
from their optimal rank, propose moving the most displaced one (ties broken
by earlier optimal rank) to its optimal rank. Fallback, when the ranking is
already optimal or every misplaced item was declined: pick a uniformly
random item below the top and propose moving it up one position.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .survival import SurvivalScenario


@dataclass(frozen=True)
class Proposal:
    item_id: str
    target_rank: int
    fallback: bool


def total_displacement(ranking: list[str] | tuple[str, ...], optimal_rank: dict[str, int]) -> int:
    return sum(abs(pos + 1 - optimal_rank[item]) for pos, item in enumerate(ranking))


def misplaced_items(ranking, optimal_rank) -> list[str]:
    return [item for pos, item in enumerate(ranking) if pos + 1 != optimal_rank[item]]


def fallback_applies(ranking, optimal_rank, declined: set[str]) -> bool:
    return all(item in declined for item in misplaced_items(ranking, optimal_rank))


def propose_change(current: list[str] | tuple[str, ...], scenario: SurvivalScenario,
                   declined: set[str], rng: random.Random) -> Proposal:
    if sorted(current) != sorted(scenario.items):
        raise ValueError("current ranking is not a permutation of the scenario items")
    optimal = scenario.optimal_rank
    eligible = [item for item in misplaced_items(current, optimal) if item not in declined]
    if eligible:
        def key(item: str):
            pos = current.index(item) + 1
            return (-abs(pos - optimal[item]), optimal[item])
        item = min(eligible, key=key)
        return Proposal(item_id=item, target_rank=optimal[item], fallback=False)
    candidates = [item for pos, item in enumerate(current) if pos > 0]
    item = rng.choice(candidates)
    return Proposal(item_id=item, target_rank=current.index(item), fallback=True)


def apply_proposal(current: list[str] | tuple[str, ...], proposal: Proposal) -> list[str]:
    """Remove the item and reinsert it at the target rank; others shift."""
    items = [i for i in current if i != proposal.item_id]
    if len(items) != len(current) - 1:
        raise ValueError(f"proposal item {proposal.item_id!r} not in ranking")
    if not 1 <= proposal.target_rank <= len(current):
        raise ValueError(f"target rank {proposal.target_rank} out of range")
    items.insert(proposal.target_rank - 1, proposal.item_id)
    return items
