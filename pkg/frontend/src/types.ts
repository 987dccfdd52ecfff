export interface Proposal {
    item: string
    item_name: string
    target_rank: number
    fallback: boolean
    index: number
}

export interface SessionState {
    session_phase: string
    participant?: string
    n_interactions?: number
    interaction_index?: number
    accepted_counts?: number[]
    phase?: string
    item_index?: number
    proposal_index?: number
    condition?: string
    actor?: string
    face?: string
    scenario?: string
    item_order?: string[]
    item_names?: Record<string, string>
    ranking?: string[] | null
    pending_proposal?: Proposal | null
    accepted_count?: number
}

export interface EventAccepted {
    ok: true
    kind: string
    result: Record<string, unknown>
    state: SessionState
}

export interface EventRejected {
    ok: false
    error: string
    phase: string
}

export type EventResult = EventAccepted | EventRejected

export interface Telemetry {
    t: number
    session_phase: string
    bus?: { published: number; delivered: number; dropped: number; per_pattern_drops: Record<string, number> }
    gateway?: { parsed: number; parse_errors: number; dropped_nonmonotonic: number; missing_channel_fills: number; last_receive_latency_ms: number | null }
    renderer?: { servo_emitted: number; blendshape_emitted: number }
    playback?: { active: string | null; duration_ms: number | null; t_start: number | null }
}

export type PromptCatalog = Record<string, string[]>

export interface LogEntry {
    t: number
    text: string
    level: "info" | "error"
}
