"""Prompt playback: plays a pre-recorded prompt's audio on command and
streams its lipsync blendshape track on the bus at the recorded timing.

A library directory holds ``manifest.jsonl`` with one prompt per line:
``{"id": ..., "category": ..., "variants": [{"audio": ..., "track": ...}]}``
plus the referenced WAV and track files.
"""

from __future__ import annotations

import json
import random
import wave
from dataclasses import dataclass, field
from pathlib import Path

from .frames import LIP_CHANNELS
from .tracks import GestureTrack, TrackError, load_track
from .wire import KIND_CONTROL, KIND_LIPSYNC, lipsync_frame_data

TOPIC_LIPSYNC = "lipsync.frames"
TOPIC_PLAYBACK_EVENTS = "control.playback.events"
TOPIC_PLAYBACK_COMMANDS = "control.playback"

DURATION_TOLERANCE_MS = 50

CATEGORIES = ("greeting", "item-description", "proposal", "filler", "answer")


class PlaybackError(ValueError):
    pass


class LibraryError(ValueError):
    pass


@dataclass(frozen=True)
class PromptVariant:
    audio: Path
    track: GestureTrack
    audio_duration_ms: int


@dataclass(frozen=True)
class PromptRecording:
    prompt_id: str
    category: str
    variants: tuple[PromptVariant, ...]


@dataclass
class PromptLibrary:
    actor_id: str
    prompts: dict[str, PromptRecording]
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.prompts)

    def catalog(self) -> dict[str, list[str]]:
        by_category: dict[str, list[str]] = {}
        for p in self.prompts.values():
            by_category.setdefault(p.category, []).append(p.prompt_id)
        for ids in by_category.values():
            ids.sort()
        return by_category


def wav_duration_ms(path: Path) -> int:
    with wave.open(str(path), "rb") as wf:
        return round(wf.getnframes() * 1000 / wf.getframerate())


def load_library(directory: str | Path, actor_id: str | None = None,
                 lip_channels: tuple[str, ...] = LIP_CHANNELS) -> PromptLibrary:
    """Load and fully validate a prompt library; all problems are collected
    and raised together so a broken manifest is fixable in one pass."""
    directory = Path(directory)
    manifest = directory / "manifest.jsonl"
    if not manifest.exists():
        raise LibraryError(f"no manifest.jsonl in {directory}")
    actor = actor_id or directory.name
    library = PromptLibrary(actor_id=actor, prompts={})
    problems: list[str] = []
    lip_set = set(lip_channels)

    with open(manifest, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        library.warnings.append("empty manifest: library has no prompts")
        return library

    for lineno, line in enumerate(lines, start=1):
        try:
            entry = json.loads(line)
            prompt_id = entry["id"]
            category = entry["category"]
            raw_variants = entry["variants"]
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"line {lineno}: malformed entry: {exc}")
            continue
        if prompt_id in library.prompts:
            problems.append(f"line {lineno}: duplicate prompt id {prompt_id!r}")
            continue
        if not raw_variants:
            problems.append(f"line {lineno}: prompt {prompt_id!r} has no variants")
            continue
        variants = []
        for vi, v in enumerate(raw_variants):
            audio = directory / v["audio"]
            track_path = directory / v["track"]
            if not audio.exists():
                problems.append(f"{prompt_id}[{vi}]: missing audio file {v['audio']}")
                continue
            try:
                track = load_track(track_path)
            except (TrackError, OSError) as exc:
                problems.append(f"{prompt_id}[{vi}]: bad track {v['track']}: {exc}")
                continue
            off_lip = set(track.channels) - lip_set
            if off_lip:
                problems.append(f"{prompt_id}[{vi}]: track uses non-lip channels {sorted(off_lip)[:3]}")
                continue
            try:
                duration = wav_duration_ms(audio)
            except (wave.Error, OSError, EOFError) as exc:
                problems.append(f"{prompt_id}[{vi}]: unreadable audio {v['audio']}: {exc}")
                continue
            if abs(duration - track.duration_ms) > DURATION_TOLERANCE_MS:
                library.warnings.append(
                    f"{prompt_id}[{vi}]: audio {duration} ms vs track {track.duration_ms} ms"
                )
            variants.append(PromptVariant(audio=audio, track=track, audio_duration_ms=duration))
        if not variants:
            continue
        library.prompts[prompt_id] = PromptRecording(
            prompt_id=prompt_id, category=category, variants=tuple(variants)
        )

    if problems:
        raise LibraryError("library load failed:\n  " + "\n  ".join(problems))
    return library


class NullAudioSink:
    """Timing-only stand-in for real audio output."""

    def __init__(self):
        self.events: list[tuple[str, str, int]] = []

    def start(self, path: Path, duration_ms: int, t: int) -> None:
        self.events.append(("start", str(path), t))

    def stop(self, t: int) -> None:
        self.events.append(("stop", "", t))


@dataclass
class PlaybackHandle:
    prompt_id: str
    variant_index: int
    t_start: int
    duration_ms: int


class PlaybackService:
    """One active playback at a time; a new prompt preempts the old one and
    the old one never emits another frame after its stop event."""

    def __init__(self, bus, library: PromptLibrary, clock, audio_sink=None, rng=None):
        self.bus = bus
        self.library = library
        self.clock = clock
        self.audio = audio_sink or NullAudioSink()
        self.rng = rng or random.Random()
        self._generation = 0
        self._active: PlaybackHandle | None = None
        self._command_sub = bus.subscribe(TOPIC_PLAYBACK_COMMANDS)

    @property
    def active(self) -> PlaybackHandle | None:
        return self._active

    def play(self, prompt_id: str, variant_policy: str | int = "random") -> PlaybackHandle:
        prompt = self.library.prompts.get(prompt_id)
        if prompt is None:
            raise PlaybackError(f"unknown prompt id: {prompt_id!r}")
        if isinstance(variant_policy, int):
            if not 0 <= variant_policy < len(prompt.variants):
                raise PlaybackError(f"variant {variant_policy} out of range for {prompt_id!r}")
            index = variant_policy
        elif variant_policy == "random":
            index = self.rng.randrange(len(prompt.variants))
        else:
            raise PlaybackError(f"unknown variant policy: {variant_policy!r}")

        now = self.clock.now_ms()
        if self._active is not None:
            self.stop()
        variant = prompt.variants[index]
        self._generation += 1
        gen = self._generation
        handle = PlaybackHandle(
            prompt_id=prompt_id,
            variant_index=index,
            t_start=now,
            duration_ms=variant.track.duration_ms,
        )
        self._active = handle
        self.audio.start(variant.audio, variant.audio_duration_ms, now)
        self._emit_event("playback_started", handle, now)
        for frame in variant.track.frames:
            at = now + frame.t_rel
            bs = dict(frame.blendshapes)
            t_rel = frame.t_rel
            self.clock.call_at(at, lambda gen=gen, at=at, t_rel=t_rel, bs=bs: self._emit_frame(gen, at, t_rel, bs))
        self.clock.call_at(now + variant.track.duration_ms,
                           lambda gen=gen: self._finish(gen))
        return handle

    def stop(self) -> None:
        if self._active is None:
            return
        now = self.clock.now_ms()
        handle = self._active
        self._active = None
        self._generation += 1  # invalidates pending emissions
        self.audio.stop(now)
        self._emit_event("playback_stopped", handle, now)

    def _emit_frame(self, gen: int, t: int, t_rel: int, bs: dict[str, float]) -> None:
        if gen != self._generation:
            return
        self.bus.publish(TOPIC_LIPSYNC, KIND_LIPSYNC, lipsync_frame_data(t, t_rel, bs), t)

    def _finish(self, gen: int) -> None:
        if gen != self._generation or self._active is None:
            return
        handle = self._active
        self._active = None
        self.audio.stop(self.clock.now_ms())
        self._emit_event("playback_finished", handle, self.clock.now_ms())

    def _emit_event(self, name: str, handle: PlaybackHandle, t: int) -> None:
        self.bus.publish(TOPIC_PLAYBACK_EVENTS, KIND_CONTROL, {
            "name": name,
            "prompt_id": handle.prompt_id,
            "variant": handle.variant_index,
            "duration_ms": handle.duration_ms,
        }, t)

    def pump(self) -> int:
        """Handle queued play/stop commands from the control topic."""
        n = 0
        while (msg := self._command_sub.try_get()) is not None:
            if msg.topic != TOPIC_PLAYBACK_COMMANDS:
                continue
            name = msg.data.get("name")
            try:
                if name == "play":
                    policy = msg.data.get("variant", "random")
                    self.play(msg.data["prompt_id"], policy)
                elif name == "stop":
                    self.stop()
            except PlaybackError as exc:
                self.bus.publish(TOPIC_PLAYBACK_EVENTS, KIND_CONTROL,
                                 {"name": "playback_error", "error": str(exc)}, msg.t)
            n += 1
        return n
