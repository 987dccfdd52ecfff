"""Per-session experiment state: the interaction phase machine, outcome
bookkeeping, questionnaire capture, and the append-only session log."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .proposals import Proposal, apply_proposal, propose_change
from .schedule import Interaction, Session
from .survival import SurvivalScenario
from .wire import json_line

N_ITEMS = 5
N_PROPOSALS = 3
N_QUESTIONS = 28
LIKERT_MIN, LIKERT_MAX = 1, 7

PHASE_INTRO = "intro"
PHASE_ITEMS = "item_discussion"
PHASE_RANKING = "participant_ranking"
PHASE_PROPOSAL = "proposal"
PHASE_QUESTIONNAIRE = "questionnaire"
PHASE_DONE = "done"


class IllegalTransition(ValueError):
    def __init__(self, phase: str, event: str, why: str = ""):
        self.phase = phase
        self.event = event
        super().__init__(f"event {event!r} not legal in phase {phase!r}" + (f": {why}" if why else ""))


def validate_questionnaire(answers: list[int]) -> None:
    if len(answers) != N_QUESTIONS:
        raise ValueError(f"expected {N_QUESTIONS} answers, got {len(answers)}")
    bad = [i for i, a in enumerate(answers) if not (isinstance(a, int) and LIKERT_MIN <= a <= LIKERT_MAX)]
    if bad:
        raise ValueError(f"answers out of range {LIKERT_MIN}..{LIKERT_MAX} at indices {bad}")


@dataclass
class ProposalOutcome:
    proposal: Proposal
    accepted: bool
    t: int


@dataclass
class InteractionMachine:
    """Phase machine for one interaction:
    intro -> item_discussion(1..5) -> participant_ranking -> proposal(1..3)
    -> questionnaire -> done. Prompts may be played in any phase."""

    interaction: Interaction
    scenario: SurvivalScenario
    rng: random.Random
    phase: str = PHASE_INTRO
    item_index: int = 0
    proposal_index: int = 0
    initial_ranking: list[str] | None = None
    current_ranking: list[str] | None = None
    declined: set[str] = field(default_factory=set)
    pending_proposal: Proposal | None = None
    outcomes: list[ProposalOutcome] = field(default_factory=list)
    questionnaire: list[int] | None = None
    free_text: str = ""
    transitions: list[tuple[int, str]] = field(default_factory=list)
    prompts_played: list[tuple[int, str]] = field(default_factory=list)

    def _enter(self, phase: str, t: int) -> None:
        self.phase = phase
        self.transitions.append((t, phase))

    @property
    def accepted_count(self) -> int:
        return sum(1 for o in self.outcomes if o.accepted)

    def note_prompt(self, prompt_id: str, t: int) -> None:
        self.prompts_played.append((t, prompt_id))

    def start_items(self, t: int) -> None:
        if self.phase != PHASE_INTRO:
            raise IllegalTransition(self.phase, "start_items")
        self.item_index = 1
        self._enter(PHASE_ITEMS, t)

    def next_item(self, t: int) -> None:
        if self.phase != PHASE_ITEMS:
            raise IllegalTransition(self.phase, "next_item")
        if self.item_index < N_ITEMS:
            self.item_index += 1
            self.transitions.append((t, f"{PHASE_ITEMS}:{self.item_index}"))
        else:
            self._enter(PHASE_RANKING, t)

    def submit_ranking(self, ordering: list[str], t: int) -> Proposal:
        if self.phase != PHASE_RANKING:
            raise IllegalTransition(self.phase, "submit_ranking")
        if sorted(ordering) != sorted(self.scenario.items):
            raise ValueError(f"ranking must be a permutation of {sorted(self.scenario.items)}")
        self.initial_ranking = list(ordering)
        self.current_ranking = list(ordering)
        self.proposal_index = 1
        self.pending_proposal = propose_change(self.current_ranking, self.scenario, self.declined, self.rng)
        self._enter(PHASE_PROPOSAL, t)
        return self.pending_proposal

    def record_outcome(self, accepted: bool, t: int) -> Proposal | None:
        if self.phase != PHASE_PROPOSAL or self.pending_proposal is None:
            raise IllegalTransition(self.phase, "record_outcome")
        proposal = self.pending_proposal
        self.outcomes.append(ProposalOutcome(proposal=proposal, accepted=accepted, t=t))
        if accepted:
            self.current_ranking = apply_proposal(self.current_ranking, proposal)
        else:
            self.declined.add(proposal.item_id)
        if self.proposal_index < N_PROPOSALS:
            self.proposal_index += 1
            self.pending_proposal = propose_change(self.current_ranking, self.scenario, self.declined, self.rng)
            self.transitions.append((t, f"{PHASE_PROPOSAL}:{self.proposal_index}"))
            return self.pending_proposal
        self.pending_proposal = None
        self._enter(PHASE_QUESTIONNAIRE, t)
        return None

    def submit_questionnaire(self, answers: list[int], free_text: str, t: int) -> None:
        if self.phase != PHASE_QUESTIONNAIRE:
            raise IllegalTransition(self.phase, "submit_questionnaire")
        validate_questionnaire(answers)
        self.questionnaire = list(answers)
        self.free_text = free_text
        self._enter(PHASE_DONE, t)


@dataclass
class SessionLogger:
    """Append-only JSON-lines log; one file per session."""

    path: Path
    _fh: object = None

    def __post_init__(self):
        self.path = Path(self.path)
        self._fh = open(self.path, "ab")

    def write(self, t: int, kind: str, **payload) -> None:
        self._fh.write(json_line({"t": t, "kind": kind, **payload}))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


@dataclass
class InteractionRecord:
    """Flat per-interaction summary used by the analysis."""

    participant: str
    position: int
    condition: str
    actor: str
    face: str
    scenario: str
    accepted_count: int
    answers: list[int]
    free_text: str = ""

    def to_dict(self) -> dict:
        return {
            "participant": self.participant,
            "position": self.position,
            "condition": self.condition,
            "actor": self.actor,
            "face": self.face,
            "scenario": self.scenario,
            "accepted_count": self.accepted_count,
            "answers": list(self.answers),
            "free_text": self.free_text,
        }


def interaction_record(session: Session, index: int, machine: InteractionMachine) -> InteractionRecord:
    i = session.interactions[index]
    return InteractionRecord(
        participant=session.participant_id,
        position=index + 1,
        condition=i.condition,
        actor=i.actor_id,
        face=i.face_id,
        scenario=i.scenario_id,
        accepted_count=machine.accepted_count,
        answers=list(machine.questionnaire or []),
        free_text=machine.free_text,
    )


def load_session_records(log_path: str | Path) -> list[InteractionRecord]:
    """Recover the per-interaction summaries from a session log."""
    records = []
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.get("kind") == "interaction_complete":
                r = obj["record"]
                records.append(InteractionRecord(
                    participant=r["participant"],
                    position=int(r["position"]),
                    condition=r["condition"],
                    actor=r["actor"],
                    face=r["face"],
                    scenario=r["scenario"],
                    accepted_count=int(r["accepted_count"]),
                    answers=[int(a) for a in r["answers"]],
                    free_text=r.get("free_text", ""),
                ))
    return records


def load_records_from_dir(logs_dir: str | Path) -> list[InteractionRecord]:
    records = []
    for path in sorted(Path(logs_dir).glob("*.jsonl")):
        records.extend(load_session_records(path))
    return records
