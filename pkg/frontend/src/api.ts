import { EventResult, PromptCatalog, SessionState, Telemetry } from "./types.js"

export type FetchLike = (url: string, init?: { method?: string; headers?: Record<string, string>; body?: string }) => Promise<{ status: number; json(): Promise<unknown> }>

// The console is render-only: every mutation is POSTed to the harness and the
// harness's answer is the only source of truth. Nothing is decided locally.
export class WizardApi {
    constructor(private base: string, private fetchImpl: FetchLike = fetch.bind(globalThis)) {}

    async state(): Promise<SessionState> {
        return (await this.getJson("/api/session")) as SessionState
    }

    async prompts(): Promise<PromptCatalog> {
        return (await this.getJson("/api/prompts")) as PromptCatalog
    }

    async telemetry(): Promise<Telemetry> {
        return (await this.getJson("/api/telemetry")) as Telemetry
    }

    async postEvent(event: Record<string, unknown>): Promise<EventResult> {
        const resp = await this.fetchImpl(this.base + "/api/session/event", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(event),
        })
        return (await resp.json()) as EventResult
    }

    beginSession(participant: string) {
        return this.postEvent({ kind: "begin_session", participant })
    }

    beginInteraction() {
        return this.postEvent({ kind: "begin_interaction" })
    }

    startItems() {
        return this.postEvent({ kind: "start_items" })
    }

    nextItem() {
        return this.postEvent({ kind: "next_item" })
    }

    playPrompt(promptId: string) {
        return this.postEvent({ kind: "play_prompt", prompt_id: promptId })
    }

    submitRanking(order: string[]) {
        return this.postEvent({ kind: "submit_ranking", order })
    }

    recordOutcome(accepted: boolean) {
        return this.postEvent({ kind: "record_outcome", accepted })
    }

    submitQuestionnaire(answers: number[], freeText: string) {
        return this.postEvent({ kind: "submit_questionnaire", answers, free_text: freeText })
    }

    submitFinalQuestionnaire(differences: string, comments: string) {
        return this.postEvent({ kind: "submit_final_questionnaire", differences, comments })
    }

    private async getJson(path: string): Promise<unknown> {
        const resp = await this.fetchImpl(this.base + path)
        if (resp.status !== 200) {
            throw new Error(`GET ${path} -> ${resp.status}`)
        }
        return resp.json()
    }
}
