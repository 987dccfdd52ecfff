"""Record wizard-API request/response fixtures for the console contract
tests by driving a real session controller through the HTTP facade."""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from gestrelay.bus import MessageBus
from gestrelay.clock import SimClock
from gestrelay.harness import ControllerConfig, SessionController
from gestrelay.httpapi import create_app
from gestrelay.playback import PlaybackService, load_library
from gestrelay.schedule import generate_schedule
from gestrelay.session import load_session_records
from gestrelay.sim import SIM_EPOCH_MS, make_placeholder_library

OUT = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


class Recorder:
    def __init__(self, client: TestClient):
        self.client = client
        self.exchanges: list[dict] = []

    def get(self, path: str, label: str) -> dict:
        resp = self.client.get(path)
        body = resp.json()
        self.exchanges.append({
            "label": label, "method": "GET", "path": path,
            "status": resp.status_code, "response": body,
        })
        return body

    def post(self, path: str, payload: dict, label: str) -> dict:
        resp = self.client.post(path, json=payload)
        body = resp.json()
        self.exchanges.append({
            "label": label, "method": "POST", "path": path, "request": payload,
            "status": resp.status_code, "response": body,
        })
        return body


def main() -> int:
    tmp = Path(tempfile.mkdtemp(prefix="fixture_rec_"))
    bus = MessageBus()
    clock = SimClock(SIM_EPOCH_MS)
    schedule = generate_schedule(12, seed=404)
    library = load_library(make_placeholder_library(tmp / "lib", seed=12))
    playback = PlaybackService(bus, library, clock)
    controller = SessionController(
        bus=bus, clock=clock, schedule=schedule,
        config=ControllerConfig(log_dir=tmp / "logs"),
        components={"bus": bus, "playback": playback},
    )
    client = TestClient(create_app(controller))
    rec = Recorder(client)

    rec.get("/api/prompts", "prompt_catalog")
    rec.get("/api/session", "state_idle")
    rec.post("/api/session/event", {"kind": "begin_session", "participant": "p01"}, "begin_session")

    # phase-guard failure before any interaction
    rec.post("/api/session/event", {"kind": "record_outcome", "accepted": True},
             "outcome_rejected_no_interaction")

    outcomes = iter([True, False, True, True, True, False, False, True, False])
    answer_sets = iter([[4] * 28, [5] * 12 + [3] * 10 + [6] * 6, [2] * 28])
    for interaction in range(3):
        rec.post("/api/session/event", {"kind": "begin_interaction"}, f"i{interaction}_begin")
        rec.get("/api/session", f"i{interaction}_state_intro")
        rec.post("/api/session/event", {"kind": "play_prompt", "prompt_id": "greeting_1"},
                 f"i{interaction}_prompt_greeting")
        playback.pump()
        rec.get("/api/telemetry", f"i{interaction}_telemetry_playing")
        if interaction == 0:
            # guard: outcome while still in intro
            rec.post("/api/session/event", {"kind": "record_outcome", "accepted": True},
                     "outcome_rejected_intro_phase")
            # guard: unknown prompt
            rec.post("/api/session/event", {"kind": "play_prompt", "prompt_id": "item_1",
                                            "variant": 0}, "prompt_item1")
            playback.pump()
        rec.post("/api/session/event", {"kind": "start_items"}, f"i{interaction}_start_items")
        for _ in range(5):
            rec.post("/api/session/event", {"kind": "next_item"}, f"i{interaction}_next_item")
        state = rec.get("/api/session", f"i{interaction}_state_ranking")
        order = state["item_order"]
        if interaction == 0:
            rec.post("/api/session/event",
                     {"kind": "submit_ranking", "order": [order[0]] * 5},
                     "ranking_rejected_not_permutation")
        rec.post("/api/session/event", {"kind": "submit_ranking", "order": order},
                 f"i{interaction}_submit_ranking")
        for j in range(3):
            accepted = next(outcomes)
            rec.post("/api/session/event", {"kind": "record_outcome", "accepted": accepted},
                     f"i{interaction}_outcome_{j}")
        if interaction == 0:
            rec.post("/api/session/event", {"kind": "record_outcome", "accepted": True},
                     "outcome_rejected_questionnaire_phase")
        rec.post("/api/session/event",
                 {"kind": "submit_questionnaire", "answers": next(answer_sets),
                  "free_text": f"interaction {interaction}"},
                 f"i{interaction}_questionnaire")
        rec.get("/api/session", f"i{interaction}_state_after")
    rec.post("/api/session/event",
             {"kind": "submit_final_questionnaire", "differences": "several", "comments": "none"},
             "final_questionnaire")
    rec.get("/api/session", "state_done")
    rec.get("/api/telemetry", "telemetry_final")

    controller.close()
    records = load_session_records(tmp / "logs" / "p01.jsonl")
    session_log_summary = {
        "participant": "p01",
        "accepted_counts": [r.accepted_count for r in records],
        "conditions": [r.condition for r in records],
        "positions": [r.position for r in records],
    }

    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "session_flow.json").write_text(
        json.dumps({"exchanges": rec.exchanges, "session_log": session_log_summary}, indent=2)
        + "\n", encoding="utf-8")

    telemetry_samples = []
    for k in range(4):
        clock.run_until(clock.now_ms() + 500)
        snap = controller.telemetry()
        snap["renderer"] = {"servo_emitted": 125 * 4 + k * 62, "blendshape_emitted": 100 + k * 12}
        snap["gateway"] = {"parsed": 240 + k * 30, "parse_errors": 0,
                           "dropped_nonmonotonic": 0, "missing_channel_fills": 0,
                           "mapping_errors": 0, "last_receive_latency_ms": 2}
        telemetry_samples.append(snap)
    (OUT / "telemetry_stream.json").write_text(
        json.dumps({"samples": telemetry_samples}, indent=2) + "\n", encoding="utf-8")

    print(f"wrote {OUT / 'session_flow.json'} ({len(rec.exchanges)} exchanges)")
    print(f"wrote {OUT / 'telemetry_stream.json'}")
    print(f"session log summary: {session_log_summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
