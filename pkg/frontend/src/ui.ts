import { searchCatalog } from "./catalog.js"
import { rankingProblem } from "./guard.js"
import { ConsoleStore } from "./state.js"
import { PromptCatalog, SessionState } from "./types.js"
import { WizardApi } from "./api.js"

function el(id: string): HTMLElement {
    const node = document.getElementById(id)
    if (!node) throw new Error(`missing element #${id}`)
    return node
}

function fmt(value: number | null, digits = 1): string {
    return value === null ? "-" : value.toFixed(digits)
}

// Pure text projections, shared by the DOM renderers and the contract tests.

export function errorText(store: ConsoleStore): string | null {
    if (!store.lastError) return null
    return `${store.lastError.error} (phase: ${store.lastError.phase})`
}

export function proposalText(store: ConsoleStore): string {
    const proposal = store.session.pending_proposal
    if (!proposal) return "no proposal pending"
    const marker = proposal.fallback ? " [fallback: random move-up]" : ""
    return `#${proposal.index}: move "${proposal.item_name}" to rank ${proposal.target_rank}${marker}`
}

export function playbackStatusText(store: ConsoleStore): string {
    const pb = store.playback
    if (!pb.promptId) return "idle"
    const status = pb.stopped ? "stopped" : "playing"
    const rtt = pb.roundTripMs !== null ? ` (cmd->start ${pb.roundTripMs} ms)` : ""
    return `${pb.promptId}: ${status}${rtt}`
}

export function renderSession(store: ConsoleStore) {
    const s: SessionState = store.session
    el("participant").textContent = s.participant ?? "-"
    el("interaction").textContent =
        s.interaction_index !== undefined && s.interaction_index >= 0
            ? `${s.interaction_index + 1} / ${s.n_interactions ?? 3}`
            : "-"
    el("condition").textContent = s.condition ?? "-"
    el("actor").textContent = s.actor ?? "-"
    el("face").textContent = s.face ?? "-"
    el("scenario").textContent = s.scenario ?? "-"
    el("phase").textContent = s.phase ?? s.session_phase
    el("accepted-count").textContent = String(s.accepted_count ?? 0)
    el("session-accepted").textContent = (s.accepted_counts ?? []).join(", ") || "-"
}

export function renderProposal(store: ConsoleStore) {
    const s = store.session
    const panel = el("proposal-panel")
    el("proposal-text").textContent = proposalText(store)
    if (!s.pending_proposal) {
        panel.classList.add("inactive")
        return
    }
    panel.classList.remove("inactive")
    const ranking = s.ranking ?? []
    el("current-ranking").innerHTML = ranking
        .map((id, i) => `<li>${i + 1}. ${s.item_names?.[id] ?? id}</li>`)
        .join("")
}

export function renderTelemetry(store: ConsoleStore) {
    el("capture-fps").textContent = fmt(store.captureFps())
    el("render-fps").textContent = fmt(store.renderFps())
    el("bus-drops").textContent = String(store.busDrops())
    el("playback-status").textContent = playbackStatusText(store)
    el("connection").textContent = store.connected ? "connected" : "reconnecting..."
    el("connection").className = store.connected ? "ok" : "bad"
}

export function renderError(store: ConsoleStore) {
    const box = el("error-box")
    const text = errorText(store)
    if (text !== null) {
        box.textContent = text
        box.classList.remove("hidden")
    } else {
        box.classList.add("hidden")
    }
}

export function renderLog(store: ConsoleStore) {
    el("event-log").innerHTML = store.log
        .slice(-40)
        .map((entry) => `<div class="${entry.level}">${new Date(entry.t).toLocaleTimeString()} ${entry.text}</div>`)
        .reverse()
        .join("")
}

export function renderCatalog(catalog: PromptCatalog, query: string, api: WizardApi, store: ConsoleStore) {
    const hits = searchCatalog(catalog, query)
    const host = el("prompt-catalog")
    host.innerHTML = ""
    for (const [category, ids] of Object.entries(hits)) {
        const section = document.createElement("section")
        const head = document.createElement("h3")
        head.textContent = category
        section.appendChild(head)
        for (const id of ids) {
            const button = document.createElement("button")
            button.textContent = id
            button.onclick = async () => {
                const sentAt = Date.now()
                const result = await api.playPrompt(id)
                store.applyEventResult("play_prompt", result, sentAt)
            }
            section.appendChild(button)
        }
        host.appendChild(section)
    }
}

export function renderRankingForm(store: ConsoleStore, api: WizardApi) {
    const s = store.session
    const form = el("ranking-form")
    const submit = el("ranking-submit") as HTMLButtonElement
    const message = el("ranking-message")
    if (s.phase !== "participant_ranking" || !s.item_order) {
        form.classList.add("inactive")
        submit.disabled = true
        return
    }
    form.classList.remove("inactive")
    const selects = Array.from(form.querySelectorAll("select"))
    if (selects.length !== s.item_order.length) {
        form.querySelectorAll("select").forEach((n) => n.remove())
        for (let i = 0; i < s.item_order.length; i++) {
            const select = document.createElement("select")
            for (const id of s.item_order) {
                const option = document.createElement("option")
                option.value = id
                option.textContent = s.item_names?.[id] ?? id
                select.appendChild(option)
            }
            select.selectedIndex = i
            select.onchange = () => refresh()
            form.insertBefore(select, submit)
        }
    }

    const refresh = () => {
        const order = Array.from(form.querySelectorAll("select")).map((n) => (n as HTMLSelectElement).value)
        const problem = rankingProblem(order, s.item_order ?? [])
        submit.disabled = problem !== null
        message.textContent = problem ?? ""
    }
    refresh()

    submit.onclick = async () => {
        const order = Array.from(form.querySelectorAll("select")).map((n) => (n as HTMLSelectElement).value)
        const result = await api.submitRanking(order)
        store.applyEventResult("submit_ranking", result, Date.now())
    }
}

export function renderAll(store: ConsoleStore, catalog: PromptCatalog, query: string, api: WizardApi) {
    renderSession(store)
    renderProposal(store)
    renderTelemetry(store)
    renderError(store)
    renderLog(store)
    renderRankingForm(store, api)
}
