// Client-side form guard only: the harness re-validates every submission.

export function isPermutation(order: string[], items: string[]): boolean {
    if (order.length !== items.length) return false
    const seen = new Set(order)
    if (seen.size !== order.length) return false
    for (const item of items) {
        if (!seen.has(item)) return false
    }
    return true
}

export function rankingProblem(order: string[], items: string[]): string | null {
    if (order.length !== items.length) {
        return `need ${items.length} items, have ${order.length}`
    }
    const dupes = order.filter((x, i) => order.indexOf(x) !== i)
    if (dupes.length > 0) {
        return `duplicate item: ${dupes[0]}`
    }
    const unknown = order.find((x) => !items.includes(x))
    if (unknown !== undefined) {
        return `unknown item: ${unknown}`
    }
    return null
}
