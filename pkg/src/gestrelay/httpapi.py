"""HTTP/WebSocket facade over the session controller, consumed by the
browser wizard console. All phase-changing mutations go through POST
/api/session/event; guard failures come back as 409 with the current-phase
diagnostic and leave state unchanged."""

from __future__ import annotations

import asyncio
import contextlib

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .harness import ControlError, SessionController, records_to_csv
from .session import IllegalTransition

DEFAULT_CONTROL_PORT = 7080
TELEMETRY_INTERVAL_S = 0.4  # keeps the console pane above 2 Hz


class EventBody(BaseModel):
    kind: str
    participant: str | None = None
    prompt_id: str | None = None
    variant: int | str | None = None
    order: list[str] | None = None
    accepted: bool | None = None
    answers: list[int] | None = None
    free_text: str | None = None
    differences: str | None = None
    comments: str | None = None

    def as_event(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


def create_app(controller: SessionController, catalog: dict[str, list[str]] | None = None) -> FastAPI:
    app = FastAPI(title="gestrelay wizard API")
    # the console is typically served from another origin/port
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.get("/api/schedule")
    def get_schedule():
        return controller.schedule.to_dict()

    @app.get("/api/session")
    def get_session():
        return controller.state()

    @app.get("/api/prompts")
    def get_prompts():
        playback = controller.components.get("playback")
        if playback is not None:
            return playback.library.catalog()
        return catalog or {}

    @app.get("/api/telemetry")
    def get_telemetry():
        return controller.telemetry()

    @app.get("/api/records.csv")
    def get_records_csv():
        return PlainTextResponse(records_to_csv(controller.records), media_type="text/csv")

    @app.post("/api/session/event")
    def post_event(body: EventBody):
        try:
            return controller.handle_event(body.as_event())
        except (ControlError, IllegalTransition, ValueError) as exc:
            phase = controller.machine.phase if controller.machine else controller.session_phase
            return JSONResponse(
                status_code=409,
                content={"ok": False, "error": str(exc), "phase": phase},
            )

    @app.websocket("/ws/telemetry")
    async def ws_telemetry(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                await ws.send_json(controller.telemetry())
                await asyncio.sleep(TELEMETRY_INTERVAL_S)
        except (WebSocketDisconnect, RuntimeError):
            return

    @app.websocket("/ws/events")
    async def ws_events(ws: WebSocket):
        await ws.accept()
        sub = controller.bus.subscribe("control")
        try:
            while True:
                msg = await asyncio.to_thread(sub.get, 0.25)
                if msg is None:
                    continue
                await ws.send_json({"topic": msg.topic, "t": msg.t, "data": msg.data})
        except (WebSocketDisconnect, RuntimeError):
            return
        finally:
            with contextlib.suppress(Exception):
                controller.bus.unsubscribe(sub)

    return app


def serve(controller: SessionController, host: str = "127.0.0.1",
          port: int = DEFAULT_CONTROL_PORT,
          catalog: dict[str, list[str]] | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(controller, catalog=catalog), host=host, port=port,
                log_level="warning")
