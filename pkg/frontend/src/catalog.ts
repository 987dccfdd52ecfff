import { PromptCatalog } from "./types.js"

export function searchCatalog(catalog: PromptCatalog, query: string): PromptCatalog {
    const q = query.trim().toLowerCase()
    if (!q) return catalog
    const out: PromptCatalog = {}
    for (const [category, ids] of Object.entries(catalog)) {
        const hits = category.toLowerCase().includes(q)
            ? ids
            : ids.filter((id) => id.toLowerCase().includes(q))
        if (hits.length > 0) out[category] = hits
    }
    return out
}

export function catalogSize(catalog: PromptCatalog): number {
    return Object.values(catalog).reduce((n, ids) => n + ids.length, 0)
}
