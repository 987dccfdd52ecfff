// Telemetry/event feed over WebSocket with exponential-backoff reconnect and
// a full state resync after every reconnect (a browser refresh or network
// blip must never leave the wizard with stale panels).

export interface WsLike {
    onopen: ((ev?: unknown) => void) | null
    onmessage: ((ev: { data: string }) => void) | null
    onclose: ((ev?: unknown) => void) | null
    onerror: ((ev?: unknown) => void) | null
    close(): void
}

export type WsFactory = (url: string) => WsLike

export interface FeedOptions {
    baseDelayMs?: number
    maxDelayMs?: number
    setTimeoutImpl?: (fn: () => void, ms: number) => unknown
}

export class TelemetryFeed {
    private ws: WsLike | null = null
    private attempts = 0
    private closed = false
    readonly baseDelayMs: number
    readonly maxDelayMs: number
    private setTimeoutImpl: (fn: () => void, ms: number) => unknown

    constructor(
        private url: string,
        private factory: WsFactory,
        private onSnapshot: (data: unknown) => void,
        private onStatus: (connected: boolean) => void,
        private onResync: () => void,
        options: FeedOptions = {},
    ) {
        this.baseDelayMs = options.baseDelayMs ?? 500
        this.maxDelayMs = options.maxDelayMs ?? 8000
        this.setTimeoutImpl = options.setTimeoutImpl ?? ((fn, ms) => setTimeout(fn, ms))
    }

    connect() {
        if (this.closed) return
        const ws = this.factory(this.url)
        this.ws = ws
        ws.onopen = () => {
            const wasRetry = this.attempts > 0
            this.attempts = 0
            this.onStatus(true)
            if (wasRetry) this.onResync()
        }
        ws.onmessage = (ev) => {
            try {
                this.onSnapshot(JSON.parse(ev.data))
            } catch {
                // a malformed frame must not kill the feed
            }
        }
        ws.onclose = () => this.scheduleReconnect()
        ws.onerror = () => ws.close()
    }

    nextDelay(): number {
        return Math.min(this.maxDelayMs, this.baseDelayMs * 2 ** this.attempts)
    }

    private scheduleReconnect() {
        if (this.closed) return
        this.onStatus(false)
        const delay = this.nextDelay()
        this.attempts += 1
        this.setTimeoutImpl(() => this.connect(), delay)
    }

    close() {
        this.closed = true
        this.ws?.close()
    }
}
