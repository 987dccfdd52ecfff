"""Session controller: the wizard's single entry point for steering a live
session. Applies control events to the interaction phase machine, commands
the behavior and playback services over the bus, and keeps the append-only
session log and CSV export."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from pathlib import Path

from .behavior import DEFAULT_DELAY_S, TOPIC_SET_STRATEGY
from .playback import TOPIC_PLAYBACK_COMMANDS
from .schedule import ExperimentSchedule, Session
from .session import (
    PHASE_DONE,
    IllegalTransition,
    InteractionMachine,
    InteractionRecord,
    SessionLogger,
    interaction_record,
)
from .stats import topic_scores
from .survival import SurvivalScenario, default_scenarios
from .wire import KIND_CONTROL

TOPIC_SESSION_EVENTS = "control.session.events"
TOPIC_SESSION_COMMANDS = "control.session.command"

SESSION_IDLE = "idle"
SESSION_BETWEEN = "between_interactions"
SESSION_RUNNING = "interaction"
SESSION_FINAL = "final_questionnaire"
SESSION_DONE = "session_done"


class ControlError(ValueError):
    pass


@dataclass
class ControllerConfig:
    log_dir: Path = Path("logs")
    natural_tracks: tuple[str, ...] = ("natural_default",)
    copy_delay_s: float = DEFAULT_DELAY_S


@dataclass
class SessionController:
    bus: object
    clock: object
    schedule: ExperimentSchedule
    config: ControllerConfig = field(default_factory=ControllerConfig)
    scenarios: dict[str, SurvivalScenario] = field(default_factory=default_scenarios)
    components: dict = field(default_factory=dict)  # telemetry providers

    session: Session | None = None
    machine: InteractionMachine | None = None
    interaction_index: int = -1
    session_phase: str = SESSION_IDLE
    records: list[InteractionRecord] = field(default_factory=list)
    final_answers: dict | None = None
    logger: SessionLogger | None = None

    def __post_init__(self):
        self._command_sub = self.bus.subscribe(TOPIC_SESSION_COMMANDS)
        Path(self.config.log_dir).mkdir(parents=True, exist_ok=True)

    # -- event entry points ------------------------------------------------

    def handle_event(self, event: dict) -> dict:
        """Apply one wizard event; raises ControlError/IllegalTransition on a
        guard failure, leaving state unchanged."""
        kind = event.get("kind")
        t = self.clock.now_ms()
        handler = {
            "begin_session": self._begin_session,
            "begin_interaction": self._begin_interaction,
            "start_items": self._start_items,
            "next_item": self._next_item,
            "play_prompt": self._play_prompt,
            "submit_ranking": self._submit_ranking,
            "record_outcome": self._record_outcome,
            "submit_questionnaire": self._submit_questionnaire,
            "submit_final_questionnaire": self._submit_final,
        }.get(kind)
        if handler is None:
            raise ControlError(f"unknown event kind: {kind!r}")
        result = handler(event, t)
        self._log(t, kind, event=event, result=result)
        self._publish_event(t, kind, result)
        return {"ok": True, "kind": kind, "result": result, "state": self.state()}

    def pump(self) -> int:
        """Apply control events arriving over the bus."""
        n = 0
        while (msg := self._command_sub.try_get()) is not None:
            try:
                self.handle_event(msg.data)
            except (ControlError, IllegalTransition, ValueError) as exc:
                self.bus.publish(TOPIC_SESSION_EVENTS, KIND_CONTROL,
                                 {"name": "error", "error": str(exc)}, msg.t)
            n += 1
        return n

    # -- handlers ------------------------------------------------------------

    def _begin_session(self, event: dict, t: int) -> dict:
        if self.session_phase not in (SESSION_IDLE, SESSION_DONE):
            raise ControlError(f"session already active (phase {self.session_phase})")
        participant = event.get("participant")
        session = next((s for s in self.schedule.sessions if s.participant_id == participant), None)
        if session is None:
            raise ControlError(f"participant {participant!r} not in schedule")
        self.session = session
        self.interaction_index = -1
        self.records = []
        self.final_answers = None
        self.machine = None
        self.session_phase = SESSION_BETWEEN
        if self.logger is not None:
            self.logger.close()
        self.logger = SessionLogger(Path(self.config.log_dir) / f"{participant}.jsonl")
        self._log(t, "session_started", participant=participant, seed=self.schedule.seed)
        return {"participant": participant}

    def _require_machine(self) -> InteractionMachine:
        if self.machine is None:
            raise ControlError("no interaction in progress")
        return self.machine

    def _begin_interaction(self, event: dict, t: int) -> dict:
        if self.session is None:
            raise ControlError("no session begun")
        if self.session_phase not in (SESSION_BETWEEN,):
            raise ControlError(f"cannot begin interaction in phase {self.session_phase}")
        self.interaction_index += 1
        interaction = self.session.interactions[self.interaction_index]
        scenario = self.scenarios[interaction.scenario_id]
        self.machine = InteractionMachine(
            interaction=interaction,
            scenario=scenario,
            rng=random.Random(interaction.rng_seed),
        )
        self.machine.transitions.append((t, self.machine.phase))
        self.session_phase = SESSION_RUNNING
        self._set_strategy(interaction, t)
        return {
            "interaction": self.interaction_index + 1,
            "condition": interaction.condition,
            "actor": interaction.actor_id,
            "face": interaction.face_id,
            "scenario": interaction.scenario_id,
        }

    def _set_strategy(self, interaction, t: int) -> None:
        data = {"name": "set_strategy", "kind": interaction.condition}
        if interaction.condition == "copy":
            data["delay_s"] = self.config.copy_delay_s
        elif interaction.condition == "natural":
            tracks = self.config.natural_tracks
            data["track"] = tracks[interaction.rng_seed % len(tracks)]
        self.bus.publish(TOPIC_SET_STRATEGY, KIND_CONTROL, data, t)

    def _start_items(self, event: dict, t: int) -> dict:
        self._require_machine().start_items(t)
        return {"phase": self.machine.phase, "item_index": self.machine.item_index}

    def _next_item(self, event: dict, t: int) -> dict:
        self._require_machine().next_item(t)
        return {"phase": self.machine.phase, "item_index": self.machine.item_index}

    def _play_prompt(self, event: dict, t: int) -> dict:
        prompt_id = event.get("prompt_id")
        if not prompt_id:
            raise ControlError("play_prompt requires prompt_id")
        if self.machine is not None:
            self.machine.note_prompt(prompt_id, t)
        self.bus.publish(TOPIC_PLAYBACK_COMMANDS, KIND_CONTROL, {
            "name": "play",
            "prompt_id": prompt_id,
            "variant": event.get("variant", "random"),
        }, t)
        return {"prompt_id": prompt_id}

    def _submit_ranking(self, event: dict, t: int) -> dict:
        machine = self._require_machine()
        proposal = machine.submit_ranking(list(event.get("order", [])), t)
        return {"phase": machine.phase, "proposal": self._proposal_dict(proposal)}

    def _record_outcome(self, event: dict, t: int) -> dict:
        machine = self._require_machine()
        accepted = bool(event.get("accepted"))
        nxt = machine.record_outcome(accepted, t)
        return {
            "phase": machine.phase,
            "accepted_count": machine.accepted_count,
            "ranking": list(machine.current_ranking),
            "next_proposal": self._proposal_dict(nxt) if nxt else None,
        }

    def _submit_questionnaire(self, event: dict, t: int) -> dict:
        machine = self._require_machine()
        machine.submit_questionnaire(
            [int(a) for a in event.get("answers", [])], event.get("free_text", ""), t
        )
        record = interaction_record(self.session, self.interaction_index, machine)
        self.records.append(record)
        self._log(t, "interaction_complete", record=record.to_dict())
        if self.interaction_index + 1 >= len(self.session.interactions):
            self.session_phase = SESSION_FINAL
        else:
            self.session_phase = SESSION_BETWEEN
        self.machine = None
        return {"phase": self.session_phase, "accepted_count": record.accepted_count}

    def _submit_final(self, event: dict, t: int) -> dict:
        if self.session_phase != SESSION_FINAL:
            raise ControlError(f"final questionnaire not open in phase {self.session_phase}")
        self.final_answers = {
            "differences": event.get("differences", ""),
            "comments": event.get("comments", ""),
        }
        self.session_phase = SESSION_DONE
        self._log(t, "session_complete", final=self.final_answers,
                  accepted_counts=[r.accepted_count for r in self.records])
        return {"phase": self.session_phase}

    # -- projections ---------------------------------------------------------

    def _proposal_dict(self, proposal) -> dict:
        machine = self.machine
        return {
            "item": proposal.item_id,
            "item_name": machine.scenario.names.get(proposal.item_id, proposal.item_id),
            "target_rank": proposal.target_rank,
            "fallback": proposal.fallback,
            "index": machine.proposal_index,
        }

    def state(self) -> dict:
        out: dict = {"session_phase": self.session_phase}
        if self.session is not None:
            out["participant"] = self.session.participant_id
            out["n_interactions"] = len(self.session.interactions)
            out["interaction_index"] = self.interaction_index
            out["accepted_counts"] = [r.accepted_count for r in self.records]
        if self.machine is not None:
            m = self.machine
            i = m.interaction
            out.update({
                "phase": m.phase,
                "item_index": m.item_index,
                "proposal_index": m.proposal_index,
                "condition": i.condition,
                "actor": i.actor_id,
                "face": i.face_id,
                "scenario": i.scenario_id,
                "item_order": list(i.item_order),
                "item_names": {k: m.scenario.names[k] for k in m.scenario.items},
                "ranking": list(m.current_ranking) if m.current_ranking else None,
                "pending_proposal": self._proposal_dict(m.pending_proposal) if m.pending_proposal else None,
                "accepted_count": m.accepted_count,
            })
        return out

    def telemetry(self) -> dict:
        out = {"t": self.clock.now_ms(), "session_phase": self.session_phase}
        bus = self.components.get("bus") or self.bus
        if hasattr(bus, "telemetry"):
            out["bus"] = bus.telemetry()
        gateway = self.components.get("gateway")
        if gateway is not None:
            out["gateway"] = gateway.telemetry.as_dict()
        renderer = self.components.get("renderer")
        if renderer is not None:
            out["renderer"] = {
                "servo_emitted": renderer.servo_emitted,
                "blendshape_emitted": renderer.blendshape_emitted,
            }
        playback = self.components.get("playback")
        if playback is not None:
            active = playback.active
            out["playback"] = {
                "active": active.prompt_id if active else None,
                "duration_ms": active.duration_ms if active else None,
                "t_start": active.t_start if active else None,
            }
        return out

    def _log(self, t: int, kind: str, **payload) -> None:
        if self.logger is not None:
            self.logger.write(t, kind, **payload)

    def _publish_event(self, t: int, kind: str, result: dict) -> None:
        self.bus.publish(TOPIC_SESSION_EVENTS, KIND_CONTROL,
                         {"name": kind, "result": result}, t)

    def close(self) -> None:
        if self.logger is not None:
            self.logger.close()
            self.logger = None


def records_to_csv(records: list[InteractionRecord]) -> str:
    """One row per interaction with the accepted count and topic scores."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([
        "participant", "position", "condition", "actor", "face", "scenario",
        "accepted_count", "credibility", "likeability", "trust",
    ])
    for r in records:
        cred, like, trust = topic_scores(r.answers)
        writer.writerow([
            r.participant, r.position, r.condition, r.actor, r.face, r.scenario,
            r.accepted_count, f"{cred:.6g}", f"{like:.6g}", f"{trust:.6g}",
        ])
    return buf.getvalue()
