import math
import random
from itertools import permutations, product

import numpy as np
import pytest
from scipy import stats as scipy_stats

from gestrelay.session import InteractionRecord
from gestrelay.stats import (
    TOPIC_ASSIGNMENT,
    analyze_records,
    bonferroni,
    chi2_sf,
    condition_matrix,
    format_chi2_p,
    friedman,
    friedman_exact,
    midranks,
    summarize,
    topic_scores,
)


class TestTopicScores:
    def test_constant_answers(self):
        assert topic_scores([4] * 28) == (4.0, 4.0, 4.0)

    def test_block_constant(self):
        answers = [7] * 12 + [1] * 16
        assert topic_scores(answers) == (7.0, 1.0, 1.0)

    def test_topic_sizes_are_12_10_6(self):
        sizes = {k: len(v) for k, v in TOPIC_ASSIGNMENT.items()}
        assert sizes == {"credibility": 12, "likeability": 10, "trust": 6}

    def test_mixed_vector_matches_plain_sums(self):
        rng = random.Random(8)
        answers = [rng.randint(1, 7) for _ in range(28)]
        cred, like, trust = topic_scores(answers)
        # independent spreadsheet-style recomputation
        assert cred == pytest.approx(sum(answers[i] for i in TOPIC_ASSIGNMENT["credibility"]) / 12)
        assert like == pytest.approx(sum(answers[i] for i in TOPIC_ASSIGNMENT["likeability"]) / 10)
        assert trust == pytest.approx(sum(answers[i] for i in TOPIC_ASSIGNMENT["trust"]) / 6)

    def test_wrong_count_rejected(self):
        with pytest.raises(ValueError, match="expected 28"):
            topic_scores([4] * 27)


class TestChi2Tail:
    # quantiles of chi-square with df=2: x_q = -2 ln(1 - q)
    REFERENCE = {
        0.5: 1.3862943611198906,
        0.9: 4.605170185988091,
        0.95: 5.991464547107982,
        0.99: 9.210340371976182,
    }

    def test_reference_quantiles_df2(self):
        for q, x in self.REFERENCE.items():
            assert chi2_sf(x, 2) == pytest.approx(1 - q, abs=1e-6)

    def test_matches_closed_form_df2(self):
        for x in (0.1, 1.0, 2.5, 6.0, 15.0):
            assert chi2_sf(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-12)

    def test_edge_cases(self):
        assert chi2_sf(0.0, 2) == 1.0
        assert chi2_sf(-1.0, 2) == 1.0
        assert chi2_sf(1e6, 2) == pytest.approx(0.0, abs=1e-12)


class TestMidranks:
    def test_no_ties(self):
        assert list(midranks([3.0, 1.0, 2.0])) == [3.0, 1.0, 2.0]

    def test_pair_tie(self):
        assert list(midranks([1.0, 1.0, 2.0])) == [1.5, 1.5, 3.0]

    def test_full_tie(self):
        assert list(midranks([2.0, 2.0, 2.0])) == [2.0, 2.0, 2.0]


class TestFriedman:
    def test_hand_computed_example(self):
        # rows (1,2,3) x3: mean ranks (1,2,3); Q = 12*3/(3*4) * 2 = 6.0
        data = [[1, 2, 3]] * 3
        res = friedman(data)
        assert res.chi2 == pytest.approx(6.0)
        assert res.df == 2
        assert res.p_raw == pytest.approx(0.049787068, abs=1e-6)

    def test_matches_reference_implementation_without_ties(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            data = rng.permuted(np.tile(np.array([1.0, 2.0, 3.0, 4.0]), (8, 1)), axis=1)
            data += rng.uniform(0, 0.001, size=data.shape)  # break any residual ties
            ours = friedman(data)
            ref_chi2, ref_p = scipy_stats.friedmanchisquare(*data.T)
            assert ours.chi2 == pytest.approx(ref_chi2, rel=1e-9)
            assert ours.p_raw == pytest.approx(ref_p, rel=1e-9)

    def test_complete_ties_degenerate(self):
        res = friedman([[2, 2, 2]] * 5)
        assert res.degenerate
        assert res.chi2 == 0.0
        assert res.p_raw == 1.0

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(5)
        data = rng.integers(0, 4, size=(10, 3)).astype(float)
        transformed = np.exp(data) + 7.0  # strictly monotone
        a, b = friedman(data), friedman(transformed)
        assert a.chi2 == pytest.approx(b.chi2, rel=1e-12)

    def test_invariant_under_column_permutation(self):
        rng = np.random.default_rng(6)
        data = rng.integers(1, 8, size=(9, 3)).astype(float)
        base = friedman(data).chi2
        for perm in permutations(range(3)):
            assert friedman(data[:, perm]).chi2 == pytest.approx(base, rel=1e-12)

    def test_paper_shaped_output_format(self):
        # n=12, k=3 synthetic accepted counts, printed in the paper's layout
        rng = np.random.default_rng(11)
        data = rng.integers(0, 4, size=(12, 3)).astype(float)
        res = friedman(data).adjusted(4)
        text = format_chi2_p(res)
        assert text.startswith("χ²=")
        assert ", p=" in text
        res_like_paper = friedman([[1, 1, 2], [2, 1, 1], [1, 2, 1], [1, 1, 1]]).adjusted(4)
        assert format_chi2_p(res_like_paper).endswith("p=1")

    def test_input_validation(self):
        with pytest.raises(ValueError):
            friedman([[1, 2, 3]])
        with pytest.raises(ValueError):
            friedman([1, 2, 3])
        with pytest.raises(ValueError):
            friedman([[1, float("nan"), 3]] * 3)


def _plain_midranks(row):
    return [
        sum(1 for other in row if other < v) + (sum(1 for other in row if other == v) + 1) / 2
        for v in row
    ]


def _plain_statistic(rows):
    """Tie-corrected Friedman statistic written independently of the library:
    plain-python midranks, textbook Q, per-row (t^3 - t) correction."""
    n, k = len(rows), len(rows[0])
    ranks = [_plain_midranks(r) for r in rows]
    mean_ranks = [sum(r[j] for r in ranks) / n for j in range(k)]
    q = 12.0 * n / (k * (k + 1)) * sum((m - (k + 1) / 2) ** 2 for m in mean_ranks)
    tie_sum = 0
    for row in rows:
        for v in set(row):
            t = row.count(v)
            tie_sum += t ** 3 - t
    correction = 1.0 - tie_sum / (n * k * (k * k - 1))
    if correction <= 0:
        return None  # every row fully tied
    return q / correction


def enumeration_p_value(data: np.ndarray) -> float:
    """Independent oracle: enumerate all k!^n within-row column permutations
    and count configurations with a statistic at least as large."""
    rows = [tuple(float(v) for v in row) for row in data]
    q_obs = _plain_statistic(rows)
    if q_obs is None:
        return 1.0
    perms = list(permutations(range(len(rows[0]))))
    arrangements = [[tuple(row[j] for j in p) for p in perms] for row in rows]
    hits = 0
    total = 0
    for combo in product(*arrangements):
        q = _plain_statistic(list(combo))
        total += 1
        if q is None or q >= q_obs - 1e-9:
            hits += 1
    return hits / total


class TestExactPermutation:
    def test_matches_enumeration_exhaustive_n2(self):
        # every 2x3 dataset over values {0..3}
        for row_a in product(range(4), repeat=3):
            for row_b in product(range(4), repeat=3):
                data = np.array([row_a, row_b], dtype=float)
                ours = friedman_exact(data).p_raw
                oracle = enumeration_p_value(data)
                assert ours == pytest.approx(oracle, abs=1e-9), (row_a, row_b)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_matches_enumeration_sampled(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(12):
            data = rng.integers(0, 4, size=(n, 3)).astype(float)
            ours = friedman_exact(data).p_raw
            oracle = enumeration_p_value(data)
            assert ours == pytest.approx(oracle, abs=1e-9)

    def test_statistic_same_as_chi2_mode(self):
        rng = np.random.default_rng(9)
        data = rng.integers(0, 4, size=(6, 3)).astype(float)
        assert friedman_exact(data).chi2 == pytest.approx(friedman(data).chi2, rel=1e-12)

    def test_exact_limits(self):
        with pytest.raises(ValueError):
            friedman_exact(np.zeros((13, 3)))
        with pytest.raises(ValueError):
            friedman_exact(np.zeros((3, 4)))


class TestBonferroni:
    def test_clamp(self):
        assert bonferroni([0.3], 4) == [1.0]
        assert bonferroni([0.25], 4) == [1.0]

    def test_multiplication(self):
        assert bonferroni([0.01], 4) == [pytest.approx(0.04)]

    def test_zero_fixed_point(self):
        assert bonferroni([0.0], 1000) == [0.0]

    def test_monotone(self):
        ps = sorted(random.Random(4).random() for _ in range(50))
        out = bonferroni(ps, 60)
        assert out == sorted(out)

    def test_idempotent_at_clamp(self):
        once = bonferroni([0.9], 4)
        assert bonferroni(once, 4) == [1.0]

    def test_family_smaller_than_tests_rejected(self):
        with pytest.raises(ValueError):
            bonferroni([0.1, 0.2, 0.3], 2)

    def test_out_of_range_p_rejected(self):
        with pytest.raises(ValueError):
            bonferroni([1.5], 4)


def make_record(participant, position, condition, accepted, answers=None):
    return InteractionRecord(
        participant=participant, position=position, condition=condition,
        actor="actor_a", face="face_1", scenario="lunar_better",
        accepted_count=accepted, answers=answers or [4] * 28,
    )


class TestSummarize:
    def test_single_session(self):
        records = [
            make_record("p01", 1, "natural", 1),
            make_record("p01", 2, "copy", 1),
            make_record("p01", 3, "still", 2),
        ]
        table = summarize(records)
        accepted = {r.condition: r for r in table.rows if r.category == "accepted"}
        assert accepted["natural"].median == 1.0 and accepted["natural"].mean == 1.0
        assert accepted["still"].median == 2.0 and accepted["still"].mean == 2.0
        assert all(r.sd == 0.0 and r.n == 1 for r in accepted.values())
        assert "(n=1)" in accepted["still"].formatted()[3]

    def test_table_shape_matches_report_layout(self):
        rng = random.Random(13)
        records = []
        for p in range(6):
            for pos, condition in enumerate(("natural", "copy", "still"), start=1):
                records.append(make_record(
                    f"p{p:02d}", pos, condition, rng.randint(0, 3),
                    answers=[rng.randint(1, 7) for _ in range(28)],
                ))
        table = summarize(records)
        assert [(r.category, r.condition) for r in table.rows] == [
            (cat, cond)
            for cat in ("accepted", "credibility", "likeability", "trust")
            for cond in ("natural", "copy", "still")
        ]
        md = table.to_markdown()
        assert "Accepted robot suggestions" in md
        assert "Natural movement" in md
        for row in table.rows:
            formatted = row.formatted()[3]
            assert "±" in formatted  # mean±sd rendering

    def test_mean_sd_format_one_decimal(self):
        records = [make_record(f"p{i}", 1, "copy", a) for i, a in enumerate((0, 1, 2, 3, 1, 2))]
        table = summarize(records)
        row = next(r for r in table.rows if r.category == "accepted" and r.condition == "copy")
        text = row.formatted()[3]
        assert text == f"{row.mean:.1f}±{row.sd:.1f}"

    def test_incomplete_interaction_excluded_with_warning(self):
        records = [
            make_record("p01", 1, "natural", 1),
            InteractionRecord("p01", 2, "copy", "actor_a", "face_1", "lunar_better", 1, answers=[]),
        ]
        table = summarize(records)
        assert any("incomplete" in w for w in table.warnings)
        assert any("no data" in w for w in table.warnings)  # copy rows omitted

    def test_engineered_means(self):
        # three participants with accepted counts tuned to means 1.0/2.0/3.0
        records = []
        for i, (nat, cop, sti) in enumerate([(1, 2, 3), (1, 2, 3), (1, 2, 3)]):
            records += [
                make_record(f"p{i}", 1, "natural", nat),
                make_record(f"p{i}", 2, "copy", cop),
                make_record(f"p{i}", 3, "still", sti),
            ]
        rows = {(r.category, r.condition): r for r in summarize(records).rows}
        assert rows[("accepted", "natural")].mean == pytest.approx(1.0)
        assert rows[("accepted", "copy")].mean == pytest.approx(2.0)
        assert rows[("accepted", "still")].mean == pytest.approx(3.0)


class TestAnalyzeRecords:
    def _records(self, n=12, seed=21):
        rng = random.Random(seed)
        records = []
        for p in range(n):
            for pos, condition in enumerate(("natural", "copy", "still"), start=1):
                records.append(make_record(
                    f"p{p:02d}", pos, condition, rng.randint(0, 3),
                    answers=[rng.randint(1, 7) for _ in range(28)],
                ))
        return records

    def test_matrix_extraction(self):
        matrix, participants = condition_matrix(self._records(), "accepted")
        assert matrix.shape == (12, 3)
        assert len(participants) == 12

    def test_four_tests_with_bonferroni_family(self):
        results = analyze_records(self._records(), m=4)
        assert set(results) == {"accepted", "credibility", "likeability", "trust"}
        for res in results.values():
            assert res.m == 4
            assert res.p_adjusted == pytest.approx(min(1.0, 4 * res.p_raw))

    def test_exact_mode_on_small_n(self):
        results = analyze_records(self._records(n=5), m=4, exact=True)
        assert all(r.exact for r in results.values())
