import { readFileSync } from "node:fs"
import { dirname, join } from "node:path"
import { fileURLToPath } from "node:url"

import { FetchLike } from "../src/api.js"
import { Telemetry } from "../src/types.js"

const HERE = dirname(fileURLToPath(import.meta.url))

export interface Exchange {
    label: string
    method: "GET" | "POST"
    path: string
    request?: Record<string, unknown>
    status: number
    response: unknown
}

export interface SessionFlow {
    exchanges: Exchange[]
    session_log: {
        participant: string
        accepted_counts: number[]
        conditions: string[]
        positions: number[]
    }
}

export function loadSessionFlow(): SessionFlow {
    return JSON.parse(readFileSync(join(HERE, "..", "fixtures", "session_flow.json"), "utf-8"))
}

export function loadTelemetryStream(): { samples: Telemetry[] } {
    return JSON.parse(readFileSync(join(HERE, "..", "fixtures", "telemetry_stream.json"), "utf-8"))
}

/** Serves the recorded exchanges in order and fails on any deviation, so a
 * passing run proves the console speaks exactly the recorded protocol. */
export class ReplayFetch {
    private cursor = 0

    constructor(private exchanges: Exchange[]) {}

    get remaining(): number {
        return this.exchanges.length - this.cursor
    }

    peek(): Exchange {
        return this.exchanges[this.cursor]
    }

    fetch: FetchLike = async (url, init) => {
        const expected = this.exchanges[this.cursor]
        if (!expected) {
            throw new Error(`unexpected request beyond recording: ${url}`)
        }
        this.cursor += 1
        const method = init?.method ?? "GET"
        const path = url.replace(/^https?:\/\/[^/]+/, "")
        if (method !== expected.method || path !== expected.path) {
            throw new Error(
                `request mismatch at '${expected.label}': got ${method} ${path}, ` +
                `recording has ${expected.method} ${expected.path}`)
        }
        if (expected.method === "POST") {
            const sent = JSON.parse(init?.body ?? "null")
            if (JSON.stringify(sent) !== JSON.stringify(expected.request)) {
                throw new Error(
                    `body mismatch at '${expected.label}': ${JSON.stringify(sent)} vs ` +
                    JSON.stringify(expected.request))
            }
        }
        return {
            status: expected.status,
            json: async () => expected.response,
        }
    }
}
