import { describe, expect, it } from "vitest"

import { isPermutation, rankingProblem } from "../src/guard.js"
import { loadSessionFlow } from "./helpers"

const ITEMS = ["a", "b", "c", "d", "e"]

describe("ranking permutation guard", () => {
    it("accepts any reordering", () => {
        expect(isPermutation(["e", "c", "a", "b", "d"], ITEMS)).toBe(true)
        expect(rankingProblem(["e", "c", "a", "b", "d"], ITEMS)).toBeNull()
    })

    it("rejects duplicates with a message", () => {
        expect(isPermutation(["a", "a", "b", "c", "d"], ITEMS)).toBe(false)
        expect(rankingProblem(["a", "a", "b", "c", "d"], ITEMS)).toContain("duplicate item: a")
    })

    it("rejects wrong length", () => {
        expect(isPermutation(["a", "b"], ITEMS)).toBe(false)
        expect(rankingProblem(["a", "b"], ITEMS)).toContain("need 5 items")
    })

    it("rejects foreign items", () => {
        expect(isPermutation(["a", "b", "c", "d", "z"], ITEMS)).toBe(false)
        expect(rankingProblem(["a", "b", "c", "d", "z"], ITEMS)).toContain("unknown item: z")
    })

    it("agrees with the harness on the recorded rejection", () => {
        // the recorded non-permutation submit was rejected server-side; the
        // client-side guard would have disabled that submit in the first place
        const flow = loadSessionFlow()
        const rejected = flow.exchanges.find((e) => e.label === "ranking_rejected_not_permutation")!
        expect(rejected.status).toBe(409)
        const sent = rejected.request!.order as string[]
        const stateBefore = flow.exchanges.find((e) => e.label === "i0_state_ranking")!
        const items = (stateBefore.response as { item_order: string[] }).item_order
        expect(isPermutation(sent, items)).toBe(false)
        expect(rankingProblem(sent, items)).not.toBeNull()
        // while the actually-submitted valid ranking passes the same guard
        const accepted = flow.exchanges.find((e) => e.label === "i0_submit_ranking")!
        expect(isPermutation(accepted.request!.order as string[], items)).toBe(true)
    })
})
