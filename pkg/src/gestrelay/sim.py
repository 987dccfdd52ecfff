"""Desk-scale stand-ins for the phone, the participant, and the robot:
synthetic capture sources, bus track recording/replay, placeholder prompt
libraries, and the fully simulated end-to-end session runner."""

from __future__ import annotations

import json
import math
import random
import wave
from dataclasses import dataclass, field
from pathlib import Path

from .behavior import BehaviorEngine
from .bus import MessageBus
from .clock import SimClock
from .frames import CHANNELS, LIP_CHANNELS, HeadRotation
from .gateway import CaptureGateway
from .harness import ControllerConfig, SessionController, records_to_csv
from .playback import PlaybackService, load_library
from .renderer import FileRecorderSink, FrameRenderer, RenderConfig, SimSink
from .schedule import ExperimentSchedule, generate_schedule
from .tracks import GestureTrack, TrackFrame, load_track, save_track

SIM_EPOCH_MS = 1_000_000_000_000

AXES = ("x", "y", "z")


class SimUsageError(ValueError):
    pass


@dataclass(frozen=True)
class SynthProfile:
    """neutral | sinusoid(freq_hz, axis, amplitude_deg) | scripted(track)."""

    kind: str
    freq_hz: float = 0.125
    axis: str = "x"
    amplitude_deg: float = 10.0
    track: GestureTrack | None = None

    def __post_init__(self):
        if self.kind not in ("neutral", "sinusoid", "scripted"):
            raise SimUsageError(f"unknown synth profile: {self.kind!r}")
        if self.kind == "sinusoid" and self.axis not in AXES:
            raise SimUsageError(f"sinusoid axis must be one of {AXES}")
        if self.kind == "scripted" and self.track is None:
            raise SimUsageError("scripted profile requires a track")


def _synth_record(profile: SynthProfile, i: int, fps: int, t0: int) -> dict:
    t = t0 + round(i * 1000 / fps)
    bs = {name: 0.0 for name in CHANNELS}
    rot = [0.0, 0.0, 0.0]
    if profile.kind == "sinusoid":
        phase = 2 * math.pi * profile.freq_hz * (i / fps)
        rot[AXES.index(profile.axis)] = profile.amplitude_deg * math.sin(phase)
    elif profile.kind == "scripted":
        frame = profile.track.sample((t - t0) % max(profile.track.duration_ms, 1))
        bs.update(frame.blendshapes)
        if frame.rotation is not None:
            rot = [frame.rotation.x, frame.rotation.y, frame.rotation.z]
    return {"t": t, "seq": i, "bs": bs, "rot": rot}


def synth_records(profile: SynthProfile, fps: int, duration_s: float, t0: int = SIM_EPOCH_MS):
    """Raw device records (dicts) with exact synthetic timestamps."""
    if not 1 <= fps <= 120:
        raise SimUsageError(f"fps {fps} outside [1, 120]")
    if profile.kind == "sinusoid" and profile.freq_hz >= fps / 2:
        raise SimUsageError(f"sinusoid at {profile.freq_hz} Hz violates Nyquist for {fps} fps")
    for i in range(round(duration_s * fps)):
        yield _synth_record(profile, i, fps, t0)


def record_to_line(record: dict) -> bytes:
    return (json.dumps(record, separators=(",", ":")) + "\n").encode()


class SynthSource:
    """Feeds a gateway at a fixed rate on the simulated clock."""

    def __init__(self, gateway: CaptureGateway, clock: SimClock, profile: SynthProfile,
                 fps: int = 60, t0: int | None = None):
        self.gateway = gateway
        self.clock = clock
        self.profile = profile
        self.fps = fps
        self.t0 = clock.now_ms() if t0 is None else t0
        self._index = 0
        self._running = False
        if profile.kind == "sinusoid" and profile.freq_hz >= fps / 2:
            raise SimUsageError(f"sinusoid at {profile.freq_hz} Hz violates Nyquist for {fps} fps")

    def start(self) -> None:
        self._running = True
        self.clock.call_at(self.t0, self._emit)

    def stop(self) -> None:
        self._running = False

    def _emit(self) -> None:
        if not self._running:
            return
        record = _synth_record(self.profile, self._index, self.fps, self.t0)
        self.gateway.process_record(record_to_line(record))
        self._index += 1
        self.clock.call_at(self.t0 + round(self._index * 1000 / self.fps), self._emit)


class TrackRecorder:
    """Collects frames from one topic and writes them as a track file with
    t_rel rebased to the first frame."""

    def __init__(self, bus, topic: str, channels=CHANNELS, fps: float = 60.0):
        self.sub = bus.subscribe(topic)
        self.topic = topic
        self.channels = tuple(channels)
        self.fps = fps
        self.frames: list[tuple[int, dict, list | None]] = []

    def pump(self) -> int:
        n = 0
        while (msg := self.sub.try_get()) is not None:
            data = msg.data
            self.frames.append((int(data["t"]), dict(data["bs"]), data.get("rot")))
            n += 1
        return n

    def to_track(self) -> GestureTrack:
        track = GestureTrack(channels=self.channels, fps=self.fps)
        if not self.frames:
            return track
        t_first = self.frames[0][0]
        for t, bs, rot in self.frames:
            rotation = None if rot is None else HeadRotation(*(float(v) for v in rot))
            track.frames.append(TrackFrame(t_rel=t - t_first, blendshapes=bs, rotation=rotation))
        return track

    def save(self, path) -> GestureTrack:
        track = self.to_track()
        if not track.frames:
            raise SimUsageError(f"no frames recorded on {self.topic!r}")
        save_track(track, path)
        return track


def replay_track(bus, track: GestureTrack, topic: str = "capture.frames",
                 t0: int = SIM_EPOCH_MS) -> int:
    """Publish a track's frames back onto the bus with shifted absolute
    timestamps; content is otherwise untouched."""
    from .wire import KIND_CAPTURE, canonical_bs

    for seq, frame in enumerate(track.frames):
        rot = frame.rotation
        bus.publish(topic, KIND_CAPTURE, {
            "t": t0 + frame.t_rel,
            "seq": seq,
            "bs": canonical_bs(frame.blendshapes),
            "rot": [rot.x, rot.y, rot.z] if rot else [0.0, 0.0, 0.0],
        }, t0 + frame.t_rel)
    return len(track.frames)


def make_natural_track(seed: int = 7, duration_s: float = 10.0, fps: int = 30) -> GestureTrack:
    """Deterministic synthetic stand-in for gestures recorded in an unrelated
    conversation: slow multi-frequency head motion plus brow/smile activity."""
    rng = random.Random(seed)
    phases = [rng.uniform(0, 2 * math.pi) for _ in range(6)]
    track = GestureTrack(channels=CHANNELS, fps=float(fps))
    n = int(duration_s * fps)
    for i in range(n + 1):
        ts = i / fps
        bs = {name: 0.0 for name in CHANNELS}
        bs["browInnerUp"] = 0.25 + 0.25 * math.sin(2 * math.pi * 0.21 * ts + phases[0])
        bs["mouthSmileLeft"] = 0.3 + 0.3 * math.sin(2 * math.pi * 0.13 * ts + phases[1])
        bs["mouthSmileRight"] = 0.3 + 0.3 * math.sin(2 * math.pi * 0.13 * ts + phases[2])
        rot = HeadRotation(
            6.0 * math.sin(2 * math.pi * 0.17 * ts + phases[3]),
            8.0 * math.sin(2 * math.pi * 0.11 * ts + phases[4]),
            3.0 * math.sin(2 * math.pi * 0.07 * ts + phases[5]),
        )
        track.frames.append(TrackFrame(t_rel=round(ts * 1000), blendshapes=bs, rotation=rot))
    return track


def _write_silent_wav(path: Path, duration_ms: int, rate: int = 8000) -> None:
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(b"\x00\x00" * int(rate * duration_ms / 1000))


def _lipsync_track(duration_ms: int, seed: int, fps: int = 25) -> GestureTrack:
    rng = random.Random(seed)
    track = GestureTrack(channels=LIP_CHANNELS, fps=float(fps))
    step = 1000 // fps
    for t_rel in range(0, duration_ms + 1, step):
        openness = 0.5 + 0.5 * math.sin(2 * math.pi * 3.0 * t_rel / 1000 + rng.random() * 0.1)
        track.frames.append(TrackFrame(
            t_rel=min(t_rel, duration_ms),
            blendshapes={"jawOpen": round(0.6 * openness, 4), "mouthClose": round(0.2 * (1 - openness), 4)},
        ))
    if track.frames[-1].t_rel != duration_ms:
        track.frames.append(TrackFrame(t_rel=duration_ms, blendshapes={"jawOpen": 0.0, "mouthClose": 0.0}))
    return track


DEFAULT_PROMPT_SPECS = (
    ("greeting_1", "greeting", 1),
    ("item_1", "item-description", 2),
    ("item_2", "item-description", 1),
    ("item_3", "item-description", 1),
    ("item_4", "item-description", 1),
    ("item_5", "item-description", 2),
    ("proposal_1", "proposal", 3),
    ("filler_1", "filler", 1),
    ("answer_1", "answer", 2),
)


def make_placeholder_library(directory: Path, actor_id: str = "actor_a",
                             specs=DEFAULT_PROMPT_SPECS, seed: int = 11) -> Path:
    """A tiny deterministic prompt library with real WAVs and lipsync tracks."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    manifest_lines = []
    for prompt_id, category, n_variants in specs:
        variants = []
        for v in range(n_variants):
            duration_ms = rng.randrange(800, 2400, 40)
            audio_name = f"{prompt_id}_v{v}.wav"
            track_name = f"{prompt_id}_v{v}.track"
            _write_silent_wav(directory / audio_name, duration_ms)
            save_track(_lipsync_track(duration_ms, seed=rng.getrandbits(32)), directory / track_name)
            variants.append({"audio": audio_name, "track": track_name})
        manifest_lines.append(json.dumps(
            {"id": prompt_id, "category": category, "variants": variants},
            separators=(",", ":"),
        ))
    (directory / "manifest.jsonl").write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    return directory


# -- end-to-end session simulation -------------------------------------------


@dataclass
class ParticipantPolicy:
    """Scripted participant: initial ranking and proposal outcomes."""

    ranking: str = "random"  # random | optimal | reversed
    outcomes: str = "accept_all"  # accept_all | decline_all | accept_p
    accept_p: float = 0.5

    def initial_ranking(self, scenario, item_order, rng: random.Random) -> list[str]:
        if self.ranking == "optimal":
            return list(scenario.items)
        if self.ranking == "reversed":
            return list(reversed(scenario.items))
        order = list(item_order)
        rng.shuffle(order)
        return order

    def decide(self, rng: random.Random) -> bool:
        if self.outcomes == "accept_all":
            return True
        if self.outcomes == "decline_all":
            return False
        return rng.random() < self.accept_p


@dataclass
class E2EConfig:
    seed: int = 1234
    participant_index: int = 0
    n_participants: int = 12
    policy: ParticipantPolicy = field(default_factory=ParticipantPolicy)
    out_dir: Path = Path("e2e_out")
    step_gap_ms: int = 400
    capture_fps: int = 60
    record_sink: bool = True


@dataclass
class E2EResult:
    schedule: ExperimentSchedule
    session_log: Path
    sink_recording: Path | None
    csv_path: Path
    accepted_counts: list[int]
    sim_duration_ms: int
    sink: SimSink


class _WizardScript:
    """Deterministic wizard: steps through all three interactions, playing
    prompts and relaying the scripted participant's choices."""

    def __init__(self, controller: SessionController, playback: PlaybackService,
                 clock: SimClock, policy: ParticipantPolicy, seed: int, gap_ms: int):
        self.controller = controller
        self.playback = playback
        self.clock = clock
        self.policy = policy
        self.rng = random.Random(seed)
        self.gap = gap_ms
        self.done = False
        self.participant_id = ""
        self.queue: list[tuple] = []

    def _prompt_wait(self, prompt_id: str) -> int:
        prompt = self.playback.library.prompts[prompt_id]
        longest = max(v.track.duration_ms for v in prompt.variants)
        return longest + 150

    def start(self, participant_id: str) -> None:
        self.participant_id = participant_id
        self.queue = [("begin_session",)]
        self.clock.call_later(self.gap, self._step)

    def _event(self, kind: str, **payload) -> None:
        self.controller.handle_event({"kind": kind, **payload})

    def _step(self) -> None:
        step = self.queue.pop(0)
        kind = step[0]
        wait = self.gap
        if kind == "begin_session":
            self._event("begin_session", participant=self.participant_id)
            self.queue = [("begin_interaction",)]
        elif kind == "begin_interaction":
            self._event("begin_interaction")
            self.queue = [("prompt", "greeting_1"), ("start_items",)]
            for i in range(1, 6):
                self.queue += [("prompt", f"item_{i}"), ("next_item",)]
            self.queue += [("submit_ranking",)]
        elif kind == "prompt":
            self._event("play_prompt", prompt_id=step[1])
            wait = self._prompt_wait(step[1])
        elif kind == "start_items":
            self._event("start_items")
        elif kind == "next_item":
            self._event("next_item")
        elif kind == "submit_ranking":
            machine = self.controller.machine
            ranking = self.policy.initial_ranking(
                machine.scenario, machine.interaction.item_order, self.rng
            )
            self._event("submit_ranking", order=ranking)
            self.queue = [("prompt", "proposal_1"), ("record_outcome",)]
        elif kind == "record_outcome":
            accepted = self.policy.decide(self.rng)
            self._event("record_outcome", accepted=accepted)
            if self.controller.machine is not None and self.controller.machine.pending_proposal:
                self.queue = [("prompt", "proposal_1"), ("record_outcome",)]
            else:
                self.queue = [("submit_questionnaire",)]
        elif kind == "submit_questionnaire":
            answers = [self.rng.randint(1, 7) for _ in range(28)]
            self._event("submit_questionnaire", answers=answers, free_text="scripted run")
            if self.controller.session_phase == "final_questionnaire":
                self.queue = [("submit_final",)]
            else:
                self.queue = [("begin_interaction",)]
        elif kind == "submit_final":
            self._event("submit_final_questionnaire",
                        differences="scripted", comments="scripted")
            self.done = True
            return
        self.clock.call_later(wait, self._step)


def run_e2e(config: E2EConfig) -> E2EResult:
    """Headless full-session run of every service on one simulated clock;
    deterministic given the seed."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    clock = SimClock(SIM_EPOCH_MS)
    bus = MessageBus()

    schedule = generate_schedule(config.n_participants, config.seed)
    session = schedule.sessions[config.participant_index]

    library_dir = make_placeholder_library(out_dir / "library", seed=config.seed % 65521 + 3)
    library = load_library(library_dir, actor_id="placeholder")

    natural = make_natural_track(seed=config.seed % 9973 + 1)
    tracks = {"natural_default": natural}

    gateway = CaptureGateway(bus, clock=clock)
    engine = BehaviorEngine(bus, tracks=tracks)
    playback = PlaybackService(bus, library, clock, rng=random.Random(config.seed ^ 0x5BD1))
    sink = SimSink(clock)
    recorder_path = out_dir / "sink_recording.jsonl" if config.record_sink else None

    class TeeSink:
        def __init__(self, sinks):
            self.sinks = sinks

        def send_servo(self, cmd):
            for s in self.sinks:
                s.send_servo(cmd)

        def send_blendshape(self, cmd):
            for s in self.sinks:
                s.send_blendshape(cmd)

        def close(self):
            for s in self.sinks:
                s.close()

    sinks = [sink]
    file_sink = None
    if recorder_path is not None:
        file_sink = FileRecorderSink(recorder_path)
        sinks.append(file_sink)
    renderer = FrameRenderer(bus, TeeSink(sinks), clock, RenderConfig())

    controller = SessionController(
        bus=bus,
        clock=clock,
        schedule=schedule,
        config=ControllerConfig(log_dir=out_dir / "logs", natural_tracks=("natural_default",)),
        components={"bus": bus, "gateway": gateway, "renderer": renderer, "playback": playback},
    )

    def pump_all():
        for _ in range(8):  # cascade until quiescent
            moved = engine.pump() + playback.pump() + controller.pump()
            if moved == 0:
                break

    clock.after_event = pump_all

    source = SynthSource(gateway, clock, SynthProfile(kind="sinusoid", axis="x"),
                         fps=config.capture_fps)
    source.start()

    running = {"on": True}

    def tick():
        if not running["on"]:
            return
        renderer.drain_inputs()
        renderer.tick(clock.now_ms())
        clock.call_later(8, tick)

    clock.call_at(clock.now_ms(), tick)

    wizard = _WizardScript(controller, playback, clock, config.policy,
                           seed=config.seed ^ 0xA5A5, gap_ms=config.step_gap_ms)
    wizard.start(session.participant_id)

    # 30 simulated minutes is far beyond any scripted session
    deadline = clock.now_ms() + 30 * 60 * 1000
    while not wizard.done and clock.now_ms() < deadline:
        clock.run_until(clock.now_ms() + 1000)
    if not wizard.done:
        raise SimUsageError("e2e session did not complete before the simulation deadline")

    running["on"] = False
    source.stop()
    clock.run_until(clock.now_ms() + 50)

    controller.close()
    if file_sink is not None:
        file_sink.close()

    csv_path = out_dir / "interactions.csv"
    csv_path.write_text(records_to_csv(controller.records), encoding="utf-8")

    return E2EResult(
        schedule=schedule,
        session_log=Path(controller.config.log_dir) / f"{session.participant_id}.jsonl",
        sink_recording=recorder_path,
        csv_path=csv_path,
        accepted_counts=[r.accepted_count for r in controller.records],
        sim_duration_ms=clock.now_ms() - SIM_EPOCH_MS,
        sink=sink,
    )
