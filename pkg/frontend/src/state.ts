import { EventResult, LogEntry, SessionState, Telemetry } from "./types.js"

export interface PlaybackStatus {
    promptId: string | null
    durationMs: number | null
    startedAt: number | null
    commandSentAt: number | null
    roundTripMs: number | null
    stopped: boolean
}

// Pure projection of harness responses and telemetry. The store never
// derives proposals, rankings, or scores itself; it just keeps the last
// thing the harness said, plus an operator-facing event log.
export class ConsoleStore {
    session: SessionState = { session_phase: "idle" }
    telemetry: Telemetry | null = null
    lastTelemetry: Telemetry | null = null
    playback: PlaybackStatus = {
        promptId: null, durationMs: null, startedAt: null,
        commandSentAt: null, roundTripMs: null, stopped: false,
    }
    log: LogEntry[] = []
    lastError: { error: string; phase: string } | null = null
    connected = false

    private listeners: Array<() => void> = []

    subscribe(fn: () => void) {
        this.listeners.push(fn)
    }

    private emit() {
        for (const fn of this.listeners) fn()
    }

    setConnected(connected: boolean) {
        this.connected = connected
        if (!connected) {
            this.note("connection lost, reconnecting", "error")
        }
        this.emit()
    }

    replaceState(state: SessionState) {
        this.session = state
        this.emit()
    }

    applyEventResult(kind: string, result: EventResult, sentAt: number) {
        if (result.ok) {
            this.session = result.state
            this.lastError = null
            if (kind === "play_prompt") {
                this.playback.commandSentAt = sentAt
            }
            this.note(`${kind} ok`)
        } else {
            this.lastError = { error: result.error, phase: result.phase }
            this.note(`${kind} rejected in phase '${result.phase}': ${result.error}`, "error")
        }
        this.emit()
    }

    applyTelemetry(snapshot: Telemetry) {
        this.lastTelemetry = this.telemetry
        this.telemetry = snapshot
        const pb = snapshot.playback
        if (pb && pb.active) {
            if (pb.active !== this.playback.promptId || this.playback.stopped) {
                this.playback.promptId = pb.active
                this.playback.durationMs = pb.duration_ms
                this.playback.startedAt = pb.t_start
                this.playback.stopped = false
                if (this.playback.commandSentAt !== null && pb.t_start !== null) {
                    this.playback.roundTripMs = pb.t_start - this.playback.commandSentAt
                }
            }
        } else if (this.playback.promptId && !this.playback.stopped) {
            this.playback.stopped = true
        }
        this.emit()
    }

    applyControlEvent(topic: string, data: Record<string, unknown>) {
        const name = (data as { name?: string }).name ?? topic
        if (name === "playback_stopped" || name === "playback_finished") {
            this.playback.stopped = true
        }
        this.note(`${topic}: ${name}`)
        this.emit()
    }

    // Counter rates derived from consecutive telemetry snapshots; the
    // counters themselves come from the harness untouched.
    captureFps(): number | null {
        return this.rate((t) => t.gateway?.parsed)
    }

    renderFps(): number | null {
        return this.rate((t) => t.renderer?.servo_emitted)
    }

    busDrops(): number {
        return this.telemetry?.bus?.dropped ?? 0
    }

    private rate(pick: (t: Telemetry) => number | undefined): number | null {
        if (!this.telemetry || !this.lastTelemetry) return null
        const a = pick(this.lastTelemetry)
        const b = pick(this.telemetry)
        const dt = this.telemetry.t - this.lastTelemetry.t
        if (a === undefined || b === undefined || dt <= 0) return null
        return ((b - a) * 1000) / dt
    }

    note(text: string, level: "info" | "error" = "info") {
        this.log.push({ t: Date.now(), text, level })
        if (this.log.length > 500) this.log.shift()
    }
}
