"""Survival-task scenarios: two task types (lunar, desert) with expert item
orderings, cut into 'better' and 'worse' five-item sets from the middle ten
items of each full list."""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass
from pathlib import Path

TASK_TYPES = ("lunar", "desert")
ITEM_SETS = ("better", "worse")

# The middle ten of a 15-item list: expert ranks MIDDLE_START..MIDDLE_START+9.
MIDDLE_START = 4
SCENARIO_SIZE = 5


@dataclass(frozen=True)
class SurvivalItem:
    item_id: str
    name: str
    expert_rank: int


@dataclass(frozen=True)
class ItemList:
    task_type: str
    items: tuple[SurvivalItem, ...]


@dataclass(frozen=True)
class SurvivalScenario:
    task_type: str
    item_set: str
    items: tuple[str, ...]  # ordered by optimal rank 1..5
    optimal_rank: dict[str, int]
    names: dict[str, str]

    @property
    def scenario_id(self) -> str:
        return f"{self.task_type}_{self.item_set}"


def load_item_list(task_type: str, path: str | Path | None = None) -> ItemList:
    if path is None:
        text = (
            importlib.resources.files("gestrelay.data")
            .joinpath(f"{task_type}_items.json")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    obj = json.loads(text)
    items = tuple(
        SurvivalItem(item_id=i["id"], name=i["name"], expert_rank=int(i["expert_rank"]))
        for i in obj["items"]
    )
    if len(items) != 15:
        raise ValueError(f"{obj['task_type']}: expected 15 items, got {len(items)}")
    ranks = sorted(i.expert_rank for i in items)
    if ranks != list(range(1, 16)):
        raise ValueError(f"{obj['task_type']}: expert ranks must be a permutation of 1..15")
    return ItemList(task_type=obj["task_type"], items=items)


def build_scenarios(item_list: ItemList, middle_start: int = MIDDLE_START) -> dict[str, SurvivalScenario]:
    """Cut the middle ten items into the upper-five ('better') and lower-five
    ('worse') scenario sets."""
    by_rank = sorted(item_list.items, key=lambda i: i.expert_rank)
    middle = by_rank[middle_start - 1: middle_start - 1 + 10]
    out = {}
    for item_set, chunk in (("better", middle[:SCENARIO_SIZE]), ("worse", middle[SCENARIO_SIZE:])):
        scenario = SurvivalScenario(
            task_type=item_list.task_type,
            item_set=item_set,
            items=tuple(i.item_id for i in chunk),
            optimal_rank={i.item_id: rank for rank, i in enumerate(chunk, start=1)},
            names={i.item_id: i.name for i in chunk},
        )
        out[scenario.scenario_id] = scenario
    return out


def default_scenarios() -> dict[str, SurvivalScenario]:
    scenarios: dict[str, SurvivalScenario] = {}
    for task_type in TASK_TYPES:
        scenarios.update(build_scenarios(load_item_list(task_type)))
    return scenarios
