"""Counterbalanced experiment schedules.

Each participant meets all three gesture conditions, once per interaction.
Assignments of conditions, actors, faces, scenarios, and item presentation
orders are balanced by randomized quota-tracked search so that order and
pairing effects cancel; `validate_schedule` restates every balance rule as a
checkable constraint (C1-C8).
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .survival import SurvivalScenario, default_scenarios

CONDITIONS = ("still", "natural", "copy")


@dataclass(frozen=True)
class ActorInfo:
    actor_id: str
    gender: str  # "m" | "f"


DEFAULT_ACTORS = (
    ActorInfo("actor_a", "m"),
    ActorInfo("actor_b", "m"),
    ActorInfo("actor_c", "f"),
    ActorInfo("actor_d", "f"),
)

DEFAULT_FACES = ("face_1", "face_2", "face_3", "face_4")

SEARCH_NODE_BUDGET = 1_000_000
GENERATION_ATTEMPTS = 25


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Interaction:
    condition: str
    actor_id: str
    face_id: str
    scenario_id: str
    item_order: tuple[str, ...]
    rng_seed: int


@dataclass(frozen=True)
class Session:
    participant_id: str
    interactions: tuple[Interaction, ...]


@dataclass
class ExperimentSchedule:
    seed: int
    sessions: list[Session]
    actors: tuple[ActorInfo, ...] = DEFAULT_ACTORS
    faces: tuple[str, ...] = DEFAULT_FACES

    @property
    def interactions(self) -> list[Interaction]:
        return [i for s in self.sessions for i in s.interactions]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "actors": [{"id": a.actor_id, "gender": a.gender} for a in self.actors],
            "faces": list(self.faces),
            "sessions": [
                {
                    "participant": s.participant_id,
                    "interactions": [
                        {
                            "condition": i.condition,
                            "actor": i.actor_id,
                            "face": i.face_id,
                            "scenario": i.scenario_id,
                            "item_order": list(i.item_order),
                            "rng_seed": i.rng_seed,
                        }
                        for i in s.interactions
                    ],
                }
                for s in self.sessions
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentSchedule":
        return cls(
            seed=obj["seed"],
            actors=tuple(ActorInfo(a["id"], a["gender"]) for a in obj["actors"]),
            faces=tuple(obj["faces"]),
            sessions=[
                Session(
                    participant_id=s["participant"],
                    interactions=tuple(
                        Interaction(
                            condition=i["condition"],
                            actor_id=i["actor"],
                            face_id=i["face"],
                            scenario_id=i["scenario"],
                            item_order=tuple(i["item_order"]),
                            rng_seed=int(i["rng_seed"]),
                        )
                        for i in s["interactions"]
                    ),
                )
                for s in obj["sessions"]
            ],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSchedule":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def check_parity(n_participants: int) -> None:
    """Raise naming the first balance rule an infeasible n breaks."""
    if n_participants < 1:
        raise ScheduleError("n_participants must be positive")
    total = 3 * n_participants
    if total % 12 != 0:
        raise ScheduleError(
            f"C1 unsatisfiable: {total} interactions cannot balance 12 condition-actor pairs"
        )
    if n_participants % 3 != 0:
        raise ScheduleError(
            f"C2 unsatisfiable: {n_participants} sessions cannot balance 3 conditions over 3 positions"
        )
    if total % 4 != 0:
        raise ScheduleError(
            f"C5 unsatisfiable: {total} interactions cannot balance 4 scenarios"
        )


class _Budget:
    def __init__(self, nodes: int = SEARCH_NODE_BUDGET):
        self.remaining = nodes

    def spend(self) -> None:
        self.remaining -= 1
        if self.remaining <= 0:
            raise ScheduleError("search node budget exhausted")


def _condition_orders(n: int, rng: random.Random) -> list[tuple[str, ...]]:
    # check_parity guarantees 6 | n, so the full permutation set tiles evenly
    perms = list(itertools.permutations(CONDITIONS))
    orders = perms * (n // len(perms))
    rng.shuffle(orders)
    return orders


def _assign_balanced(slots: list[tuple[int, str]], values: list[str],
                     quota: dict[tuple[str, str], int],
                     rng: random.Random, budget: _Budget) -> list[str]:
    """Assign one value per (session, key) slot, distinct values within each
    session, spending quota[(key, value)]; randomized backtracking."""
    n_slots = len(slots)
    assignment: list[str | None] = [None] * n_slots

    def backtrack(i: int) -> bool:
        budget.spend()
        if i == n_slots:
            return True
        session, key = slots[i]
        used = {assignment[j] for j in range(i) if slots[j][0] == session}
        candidates = [v for v in values if v not in used and quota[(key, v)] > 0]
        rng.shuffle(candidates)
        # most-constrained first keeps the search shallow
        candidates.sort(key=lambda v: -quota[(key, v)])
        for v in candidates:
            assignment[i] = v
            quota[(key, v)] -= 1
            if backtrack(i + 1):
                return True
            quota[(key, v)] += 1
            assignment[i] = None
        return False

    if not backtrack(0):
        raise ScheduleError("assignment search failed")
    return assignment  # type: ignore[return-value]


def _scenario_plan(n: int, scenarios: dict[str, SurvivalScenario],
                   rng: random.Random, budget: _Budget) -> list[list[str]]:
    """Task types alternate within a session (never twice in a row), scenario
    totals balance, and no session sees the same scenario twice."""
    per_scenario = 3 * n // 4
    quota = {sid: per_scenario for sid in scenarios}
    patterns = ["LDL"] * (n // 2) + ["DLD"] * (n - n // 2)
    rng.shuffle(patterns)
    task_of = {"L": "lunar", "D": "desert"}
    plan: list[list[str]] = [[None] * 3 for _ in range(n)]  # type: ignore[misc]

    flat = [(s, p) for s in range(n) for p in range(3)]

    def backtrack(i: int) -> bool:
        budget.spend()
        if i == len(flat):
            return True
        s, p = flat[i]
        task = task_of[patterns[s][p]]
        used = {plan[s][q] for q in range(p)}
        candidates = [sid for sid, sc in scenarios.items()
                      if sc.task_type == task and sid not in used and quota[sid] > 0]
        rng.shuffle(candidates)
        candidates.sort(key=lambda sid: -quota[sid])
        for sid in candidates:
            plan[s][p] = sid
            quota[sid] -= 1
            if backtrack(i + 1):
                return True
            quota[sid] += 1
            plan[s][p] = None  # type: ignore[assignment]
        return False

    if not backtrack(0):
        raise ScheduleError("scenario assignment search failed")
    return plan


def _item_orders(scenario: SurvivalScenario, count: int, rng: random.Random) -> list[tuple[str, ...]]:
    """`count` random presentation orders where every item leads at least one
    order and closes at least one order."""
    items = list(scenario.items)
    k = len(items)
    if count < k:
        raise ScheduleError(
            f"{scenario.scenario_id}: {count} presentations cannot put all {k} items first and last"
        )
    firsts_cycle = items[:]
    rng.shuffle(firsts_cycle)
    while True:
        lasts_cycle = items[:]
        rng.shuffle(lasts_cycle)
        if all(f != l for f, l in zip(firsts_cycle, lasts_cycle)):
            break
    orders = []
    for i in range(count):
        first = firsts_cycle[i % k]
        last = lasts_cycle[i % k] if i < k else rng.choice([x for x in items if x != first])
        middle = [x for x in items if x not in (first, last)]
        rng.shuffle(middle)
        orders.append(tuple([first] + middle + [last]))
    rng.shuffle(orders)
    return orders


def generate_schedule(n_participants: int, seed: int,
                      actors: tuple[ActorInfo, ...] = DEFAULT_ACTORS,
                      faces: tuple[str, ...] = DEFAULT_FACES,
                      scenarios: dict[str, SurvivalScenario] | None = None,
                      attempts: int = GENERATION_ATTEMPTS) -> ExperimentSchedule:
    """Deterministic-given-seed counterbalanced schedule satisfying C1-C8."""
    check_parity(n_participants)
    scenarios = scenarios or default_scenarios()
    if len(actors) != 4 or len(faces) != 4 or len(scenarios) != 4:
        raise ScheduleError("schedule design requires 4 actors, 4 faces, and 4 scenarios")
    master = random.Random(seed)
    last_error: Exception | None = None
    for attempt in range(attempts):
        rng = random.Random(master.getrandbits(64))
        try:
            return _generate_once(n_participants, seed, rng, actors, faces, scenarios)
        except ScheduleError as exc:
            last_error = exc
    raise ScheduleError(f"schedule generation failed after {attempts} attempts: {last_error}")


def _generate_once(n: int, seed: int, rng: random.Random, actors, faces, scenarios) -> ExperimentSchedule:
    budget = _Budget()
    cond_orders = _condition_orders(n, rng)

    actor_slots = [(s, cond_orders[s][p]) for s in range(n) for p in range(3)]
    actor_quota = {(c, a.actor_id): 3 * n // 12 for c in CONDITIONS for a in actors}
    actor_ids = [a.actor_id for a in actors]
    actor_assignment = _assign_balanced(actor_slots, actor_ids, actor_quota, rng, budget)

    face_slots = [(s, "any") for s in range(n) for _ in range(3)]
    face_quota = {("any", f): 3 * n // 4 for f in faces}
    face_assignment = _assign_balanced(face_slots, list(faces), face_quota, rng, budget)

    scenario_plan = _scenario_plan(n, scenarios, rng, budget)

    per_scenario = 3 * n // 4
    order_pools = {sid: _item_orders(scenarios[sid], per_scenario, rng) for sid in scenarios}
    pool_index = {sid: 0 for sid in scenarios}

    sessions = []
    flat = 0
    for s in range(n):
        interactions = []
        for p in range(3):
            sid = scenario_plan[s][p]
            orders = order_pools[sid]
            item_order = orders[pool_index[sid]]
            pool_index[sid] += 1
            interactions.append(Interaction(
                condition=cond_orders[s][p],
                actor_id=actor_assignment[flat],
                face_id=face_assignment[flat],
                scenario_id=sid,
                item_order=item_order,
                rng_seed=rng.getrandbits(32),
            ))
            flat += 1
        sessions.append(Session(participant_id=f"p{s + 1:02d}", interactions=tuple(interactions)))

    schedule = ExperimentSchedule(seed=seed, sessions=sessions, actors=actors, faces=faces)
    report = validate_schedule(schedule, scenarios)
    if not report.passed:
        raise ScheduleError(f"generated schedule failed validation: {report.failures()}")
    return schedule


@dataclass
class ConstraintCheck:
    constraint: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list[ConstraintCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [f"{c.constraint}: {c.detail}" for c in self.checks if not c.passed]

    def by_name(self, name: str) -> ConstraintCheck:
        return next(c for c in self.checks if c.constraint == name)


def _counts_equal(counts: dict) -> bool:
    return len(set(counts.values())) <= 1


def validate_schedule(schedule: ExperimentSchedule,
                      scenarios: dict[str, SurvivalScenario] | None = None) -> ValidationReport:
    scenarios = scenarios or default_scenarios()
    report = ValidationReport()
    interactions = schedule.interactions
    gender_of = {a.actor_id: a.gender for a in schedule.actors}

    def add(name: str, passed: bool, detail) -> None:
        report.checks.append(ConstraintCheck(name, passed, str(detail)))

    pair_counts: dict[tuple[str, str], int] = {}
    for i in interactions:
        pair_counts[(i.condition, i.actor_id)] = pair_counts.get((i.condition, i.actor_id), 0) + 1
    add("C1", _counts_equal(pair_counts) and len(pair_counts) == 12, dict(sorted(pair_counts.items())))

    pos_counts: dict[tuple[str, int], int] = {}
    for s in schedule.sessions:
        for p, i in enumerate(s.interactions):
            pos_counts[(i.condition, p + 1)] = pos_counts.get((i.condition, p + 1), 0) + 1
    add("C2", _counts_equal(pos_counts) and len(pos_counts) == 9, dict(sorted(pos_counts.items())))

    actor_counts: dict[str, int] = {}
    for i in interactions:
        actor_counts[i.actor_id] = actor_counts.get(i.actor_id, 0) + 1
    distinct_ok = all(len({i.actor_id for i in s.interactions}) == 3 for s in schedule.sessions)
    add("C3", _counts_equal(actor_counts) and distinct_ok,
        f"totals={dict(sorted(actor_counts.items()))} distinct_per_session={distinct_ok}")

    gender_counts: dict[str, int] = {}
    for i in interactions:
        g = gender_of[i.actor_id]
        gender_counts[g] = gender_counts.get(g, 0) + 1
    add("C4", _counts_equal(gender_counts) and len(gender_counts) == 2, dict(sorted(gender_counts.items())))

    scenario_counts: dict[str, int] = {}
    for i in interactions:
        scenario_counts[i.scenario_id] = scenario_counts.get(i.scenario_id, 0) + 1
    no_repeat = True
    for s in schedule.sessions:
        tasks = [scenarios[i.scenario_id].task_type for i in s.interactions]
        if any(a == b for a, b in zip(tasks, tasks[1:])):
            no_repeat = False
    add("C5", _counts_equal(scenario_counts) and len(scenario_counts) == 4 and no_repeat,
        f"totals={dict(sorted(scenario_counts.items()))} no_consecutive_task={no_repeat}")

    combo_counts: dict[tuple[str, str], int] = {}
    for i in interactions:
        sc = scenarios[i.scenario_id]
        combo_counts[(sc.item_set, sc.task_type)] = combo_counts.get((sc.item_set, sc.task_type), 0) + 1
    add("C6", _counts_equal(combo_counts) and len(combo_counts) == 4, dict(sorted(combo_counts.items())))

    face_counts: dict[str, int] = {}
    for i in interactions:
        face_counts[i.face_id] = face_counts.get(i.face_id, 0) + 1
    add("C7", _counts_equal(face_counts) and len(face_counts) == 4, dict(sorted(face_counts.items())))

    firsts: set[str] = set()
    lasts: set[str] = set()
    for i in interactions:
        firsts.add(i.item_order[0])
        lasts.add(i.item_order[-1])
    all_items = {item for sc in scenarios.values() for item in sc.items}
    missing_first = sorted(all_items - firsts)
    missing_last = sorted(all_items - lasts)
    add("C8", not missing_first and not missing_last,
        f"never_first={missing_first} never_last={missing_last}")

    return report
