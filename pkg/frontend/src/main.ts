import { WizardApi } from "./api.js"
import { ConsoleStore } from "./state.js"
import { TelemetryFeed } from "./telemetry.js"
import { PromptCatalog, Telemetry } from "./types.js"
import { renderAll, renderCatalog } from "./ui.js"

const HTTP_BASE = `http://${location.hostname}:${location.port || 7080}`
const WS_BASE = `ws://${location.hostname}:${location.port || 7080}`

async function boot() {
    const api = new WizardApi(HTTP_BASE)
    const store = new ConsoleStore()
    let catalog: PromptCatalog = {}
    let query = ""

    const rerender = () => renderAll(store, catalog, query, api)
    store.subscribe(rerender)

    const resync = async () => {
        store.replaceState(await api.state())
        catalog = await api.prompts()
        renderCatalog(catalog, query, api, store)
    }

    const telemetryFeed = new TelemetryFeed(
        `${WS_BASE}/ws/telemetry`,
        (url) => new WebSocket(url) as never,
        (snapshot) => store.applyTelemetry(snapshot as Telemetry),
        (connected) => store.setConnected(connected),
        () => { void resync() },
    )
    const eventFeed = new TelemetryFeed(
        `${WS_BASE}/ws/events`,
        (url) => new WebSocket(url) as never,
        (msg) => {
            const m = msg as { topic: string; data: Record<string, unknown> }
            store.applyControlEvent(m.topic, m.data)
        },
        () => undefined,
        () => undefined,
    )

    document.getElementById("prompt-search")!.oninput = (ev) => {
        query = (ev.target as HTMLInputElement).value
        renderCatalog(catalog, query, api, store)
    }
    const post = (kind: string, extra: Record<string, unknown> = {}) => async () => {
        const result = await api.postEvent({ kind, ...extra })
        store.applyEventResult(kind, result, Date.now())
    }
    document.getElementById("begin-session")!.onclick = async () => {
        const participant = (document.getElementById("participant-input") as HTMLInputElement).value
        await post("begin_session", { participant })()
    }
    document.getElementById("begin-interaction")!.onclick = post("begin_interaction")
    document.getElementById("start-items")!.onclick = post("start_items")
    document.getElementById("next-item")!.onclick = post("next_item")
    document.getElementById("accept")!.onclick = post("record_outcome", { accepted: true })
    document.getElementById("decline")!.onclick = post("record_outcome", { accepted: false })

    await resync()
    telemetryFeed.connect()
    eventFeed.connect()
    rerender()
}

boot().catch((err) => {
    document.body.insertAdjacentHTML("afterbegin",
        `<div class="bad">console failed to start: ${err}</div>`)
})
