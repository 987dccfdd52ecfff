"""Analysis of session logs: questionnaire topic scores, the tie-corrected
Friedman test (chi-square approximation plus an exact permutation mode for
small samples), Bonferroni correction, and the summary table."""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaincc

from .session import InteractionRecord

CONDITION_ORDER = ("natural", "copy", "still")
CONDITION_LABELS = {"natural": "Natural movement", "copy": "Copy", "still": "Still"}
CATEGORY_ORDER = ("accepted", "credibility", "likeability", "trust")
CATEGORY_LABELS = {
    "accepted": "Accepted robot suggestions",
    "credibility": "Credibility",
    "likeability": "Likeability",
    "trust": "Trust",
}

DEFAULT_BONFERRONI_M = 4
EXACT_MAX_N = 12


def load_topic_assignment(path=None) -> dict[str, list[int]]:
    if path is None:
        text = (
            importlib.resources.files("gestrelay.data")
            .joinpath("questionnaire_topics.json")
            .read_text(encoding="utf-8")
        )
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    obj = json.loads(text)
    return {k: list(v) for k, v in obj["topics"].items()}


TOPIC_ASSIGNMENT = load_topic_assignment()


def topic_scores(answers: list[int], assignment: dict[str, list[int]] | None = None) -> tuple[float, float, float]:
    """Average the 28 Likert answers into (credibility, likeability, trust)."""
    assignment = assignment or TOPIC_ASSIGNMENT
    n = sum(len(v) for v in assignment.values())
    if len(answers) != n:
        raise ValueError(f"expected {n} answers, got {len(answers)}")
    return tuple(
        float(np.mean([answers[i] for i in assignment[topic]]))
        for topic in ("credibility", "likeability", "trust")
    )


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution via the regularized upper
    incomplete gamma function."""
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def midranks(row) -> np.ndarray:
    """Within-row ranks with ties sharing the average of their positions."""
    row = np.asarray(row, dtype=float)
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row), dtype=float)
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and row[order[j + 1]] == row[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


@dataclass
class TestResult:
    chi2: float
    df: int
    p_raw: float
    p_adjusted: float | None = None
    m: int | None = None
    n: int = 0
    k: int = 0
    tie_corrected: bool = True
    degenerate: bool = False
    exact: bool = False

    def adjusted(self, m: int) -> "TestResult":
        self.m = m
        self.p_adjusted = bonferroni([self.p_raw], m)[0]
        return self


def _friedman_statistic(data: np.ndarray) -> tuple[float, bool]:
    """Tie-corrected Friedman statistic Q; second value flags complete ties."""
    n, k = data.shape
    ranks = np.vstack([midranks(row) for row in data])
    mean_ranks = ranks.mean(axis=0)
    q_plain = 12.0 * n / (k * (k + 1)) * float(np.sum((mean_ranks - (k + 1) / 2.0) ** 2))
    tie_sum = 0.0
    for row in data:
        _, counts = np.unique(row, return_counts=True)
        tie_sum += float(np.sum(counts.astype(float) ** 3 - counts))
    correction = 1.0 - tie_sum / (n * k * (k * k - 1))
    if correction <= 0.0:
        return 0.0, True
    return q_plain / correction, False


def friedman(data, m: int | None = None) -> TestResult:
    """Friedman test on an n-subjects x k-conditions matrix, midranks for
    ties, chi-square upper tail with k-1 degrees of freedom."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ValueError("data must be a 2-d matrix (subjects x conditions)")
    n, k = arr.shape
    if n < 2 or k < 2:
        raise ValueError(f"need at least 2 subjects and 2 conditions, got {n}x{k}")
    if np.isnan(arr).any():
        raise ValueError("missing cells are not supported")
    q, degenerate = _friedman_statistic(arr)
    p = 1.0 if degenerate else chi2_sf(q, k - 1)
    res = TestResult(chi2=q, df=k - 1, p_raw=p, n=n, k=k, degenerate=degenerate)
    if m is not None:
        res.adjusted(m)
    return res


def friedman_exact(data, m: int | None = None) -> TestResult:
    """Exact conditional permutation p-value: each row's values are permuted
    over columns; the null distribution is built by dynamic programming over
    integer column rank sums, so no configuration is sampled or skipped."""
    arr = np.asarray(data, dtype=float)
    n, k = arr.shape
    if k != 3:
        raise ValueError("exact mode supports k = 3")
    if n > EXACT_MAX_N:
        raise ValueError(f"exact mode supports n <= {EXACT_MAX_N}, got {n}")
    q_obs, degenerate = _friedman_statistic(arr)
    if degenerate:
        res = TestResult(chi2=0.0, df=k - 1, p_raw=1.0, n=n, k=k, degenerate=True, exact=True)
        return res.adjusted(m) if m is not None else res

    # Scaled midranks (x2) are integers; Q is monotone in
    # U = sum_j (S_j - n(k+1))^2 over scaled column sums S_j, with the tie
    # correction constant across permutations. DP over (S_1, S_2).
    scaled_rows = [tuple(int(round(2 * r)) for r in midranks(row)) for row in arr]
    from itertools import permutations as _perms

    dist: dict[tuple[int, int], int] = {(0, 0): 1}
    for row in scaled_rows:
        row_perms = list(_perms(row))
        new: dict[tuple[int, int], int] = {}
        for (s1, s2), ways in dist.items():
            for p in row_perms:
                key = (s1 + p[0], s2 + p[1])
                new[key] = new.get(key, 0) + ways
        dist = new

    center = n * (k + 1)  # scaled per-column expectation: 2n * (k+1)/2
    row_total = n * k * (k + 1)
    u_obs = 0
    s_obs = [sum(r[j] for r in scaled_rows) for j in range(k)]
    for s in s_obs:
        u_obs += (s - center) ** 2

    total = Fraction(0)
    ge = Fraction(0)
    for (s1, s2), ways in dist.items():
        s3 = row_total - s1 - s2
        u = (s1 - center) ** 2 + (s2 - center) ** 2 + (s3 - center) ** 2
        total += ways
        if u >= u_obs:
            ge += ways
    p_exact = float(ge / total)
    res = TestResult(chi2=q_obs, df=k - 1, p_raw=p_exact, n=n, k=k, exact=True)
    return res.adjusted(m) if m is not None else res


def bonferroni(p_raws: list[float], m: int) -> list[float]:
    if m < len(p_raws):
        raise ValueError(f"family size {m} smaller than number of tests {len(p_raws)}")
    for p in p_raws:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of range: {p}")
    return [min(1.0, m * p) for p in p_raws]


def format_chi2_p(result: TestResult) -> str:
    p = result.p_adjusted if result.p_adjusted is not None else result.p_raw
    p_str = "1" if p >= 1.0 else f"{p:.3g}"
    return f"χ²={result.chi2:.2f}, p={p_str}"


@dataclass
class SummaryRow:
    category: str
    condition: str
    n: int
    median: float
    mean: float
    sd: float

    def formatted(self) -> tuple[str, str, str, str]:
        avg = f"{self.mean:.1f}±{self.sd:.1f}"
        if self.n == 1:
            avg += " (n=1)"
        return (
            CATEGORY_LABELS[self.category],
            CONDITION_LABELS[self.condition],
            f"{self.median:.1f}",
            avg,
        )


@dataclass
class SummaryTable:
    rows: list[SummaryRow]
    warnings: list[str]

    def to_markdown(self) -> str:
        lines = ["| Category | Condition | Median | Average |", "| --- | --- | --- | --- |"]
        for row in self.rows:
            lines.append("| " + " | ".join(row.formatted()) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["category,condition,n,median,mean,sd"]
        for r in self.rows:
            lines.append(f"{r.category},{r.condition},{r.n},{r.median:.6g},{r.mean:.6g},{r.sd:.6g}")
        return "\n".join(lines) + "\n"


def _category_value(record: InteractionRecord, category: str) -> float:
    if category == "accepted":
        return float(record.accepted_count)
    cred, like, trust = topic_scores(record.answers)
    return {"credibility": cred, "likeability": like, "trust": trust}[category]


def summarize(records: list[InteractionRecord]) -> SummaryTable:
    """Median and mean +/- sample standard deviation per condition and
    category; incomplete interactions are excluded with a warning."""
    warnings: list[str] = []
    complete = []
    for r in records:
        if len(r.answers) != 28:
            warnings.append(f"{r.participant} position {r.position}: incomplete, excluded")
        else:
            complete.append(r)
    rows: list[SummaryRow] = []
    for category in CATEGORY_ORDER:
        for condition in CONDITION_ORDER:
            values = [_category_value(r, category) for r in complete if r.condition == condition]
            if not values:
                warnings.append(f"no data for {category}/{condition}, row omitted")
                continue
            arr = np.asarray(values, dtype=float)
            sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
            rows.append(SummaryRow(
                category=category,
                condition=condition,
                n=len(arr),
                median=float(np.median(arr)),
                mean=float(arr.mean()),
                sd=sd,
            ))
    return SummaryTable(rows=rows, warnings=warnings)


def condition_matrix(records: list[InteractionRecord], category: str) -> tuple[np.ndarray, list[str]]:
    """Participants x conditions matrix for one category; participants with
    incomplete condition coverage are dropped."""
    by_participant: dict[str, dict[str, float]] = {}
    for r in records:
        if len(r.answers) != 28:
            continue
        by_participant.setdefault(r.participant, {})[r.condition] = _category_value(r, category)
    participants = sorted(p for p, v in by_participant.items() if set(v) >= set(CONDITION_ORDER))
    matrix = np.asarray(
        [[by_participant[p][c] for c in CONDITION_ORDER] for p in participants], dtype=float
    )
    return matrix, participants


def analyze_records(records: list[InteractionRecord], m: int = DEFAULT_BONFERRONI_M,
                    exact: bool = False) -> dict[str, TestResult]:
    """Friedman test per category across the three conditions, Bonferroni
    corrected for the m-test family."""
    results: dict[str, TestResult] = {}
    for category in CATEGORY_ORDER:
        matrix, _ = condition_matrix(records, category)
        if matrix.shape[0] < 2:
            continue
        test = friedman_exact(matrix) if exact else friedman(matrix)
        results[category] = test.adjusted(m)
    return results
