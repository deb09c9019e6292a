import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from tilmapper import (
    ScoredSet,
    ThresholdCalibrator,
    TilMap,
    apply_threshold,
    auc_score,
    roc_curve,
    youden_threshold,
)
from tilmapper.errors import SingleClassError


def scored(scores, labels):
    return ScoredSet(scores=np.asarray(scores, dtype=float), labels=np.asarray(labels))


def brute_force_auc(scores, labels) -> float:
    """Oracle: average over all positive-negative pairs, ties counted 0.5."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else (0.5 if p == n else 0.0)
    return total / (len(pos) * len(neg))


def brute_force_eer_threshold(scores, labels):
    """Oracle: exhaustive scan minimizing |FPR - FNR| in exact rational arithmetic."""
    from fractions import Fraction

    candidates = sorted(set(list(scores) + [0.0, 1.0]))
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    best_t, best_d = None, None
    for t in candidates:
        fp = sum(1 for s, l in zip(scores, labels) if l == 0 and s >= t)
        fn = sum(1 for s, l in zip(scores, labels) if l == 1 and s < t)
        d = abs(Fraction(fp, n_neg) - Fraction(fn, n_pos))
        if best_d is None or d < best_d:  # strict < keeps the smallest threshold on ties
            best_t, best_d = t, d
    return best_t, float(best_d)


def random_scored_set(rng, n_max=200):
    n = int(rng.integers(2, n_max + 1))
    labels = rng.integers(0, 2, size=n)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    # mix of continuous scores and deliberate ties
    scores = np.round(rng.random(n), int(rng.integers(1, 4)))
    return scored(scores, labels)


class TestAuc:
    def test_perfectly_separable(self):
        assert roc_curve(scored([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])).auc == 1.0

    def test_all_scores_equal_gives_half(self):
        assert auc_score(scored([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1])) == 0.5

    def test_hand_counted_pairs(self):
        # pairs: (.4 vs .2) win, (.4 vs .6) loss, (.8 vs .2) win, (.8 vs .6) win
        assert auc_score(scored([0.2, 0.4, 0.6, 0.8], [0, 1, 0, 1])) == 0.75

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            s = random_scored_set(rng, n_max=80)
            assert auc_score(s) == pytest.approx(
                brute_force_auc(s.scores.tolist(), s.labels.tolist()), abs=1e-12
            )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            s = random_scored_set(rng, n_max=60)
            transformed = scored(s.scores**3, s.labels)
            assert auc_score(transformed) == pytest.approx(auc_score(s), abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            auc_score(scored([0.1, 0.9], [1, 1]))


class TestRocCurve:
    def test_thresholds_strictly_increasing_and_fpr_monotone(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            s = random_scored_set(rng)
            roc = roc_curve(s)
            ts = roc.thresholds()
            assert (np.diff(ts) > 0).all()
            fpr = np.array([p.fpr for p in roc.points])
            assert (np.diff(fpr) <= 1e-12).all()

    def test_tpr_equals_one_minus_fnr(self):
        s = random_scored_set(np.random.default_rng(4))
        for p in roc_curve(s).points:
            assert p.tpr == pytest.approx(1.0 - p.fnr, abs=1e-15)

    def test_bookkeeping_counts(self):
        rng = np.random.default_rng(5)
        s = random_scored_set(rng, n_max=50)
        n_pos = int(s.labels.sum())
        n_neg = len(s) - n_pos
        for p in roc_curve(s).points:
            fp = round(p.fpr * n_neg)
            tp = round(p.tpr * n_pos)
            fn = round(p.fnr * n_pos)
            assert fn + tp == n_pos
            assert fp + (n_neg - fp) == n_neg


class TestYoudenThreshold:
    def test_separable_case_picks_smallest_zero_diff(self):
        res = youden_threshold(scored([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]))
        assert res.chosen_threshold == 0.8
        assert res.criterion_value == 0.0

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(77)
        for _ in range(300):
            s = random_scored_set(rng, n_max=60)
            res = youden_threshold(s)
            t, d = brute_force_eer_threshold(s.scores.tolist(), s.labels.tolist())
            assert res.chosen_threshold == t
            assert res.criterion_value == pytest.approx(d, abs=1e-12)

    def test_chosen_threshold_is_a_candidate(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            s = random_scored_set(rng, n_max=40)
            res = youden_threshold(s)
            candidates = set(s.scores.tolist()) | {0.0, 1.0}
            assert res.chosen_threshold in candidates

    def test_monotone_transform_maps_chosen_threshold(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            s = random_scored_set(rng, n_max=60)
            res = youden_threshold(s)
            transformed = scored(s.scores**3, s.labels)
            res_t = youden_threshold(transformed)
            assert res_t.chosen_threshold == pytest.approx(
                res.chosen_threshold**3, abs=1e-12
            )

    def test_youden_j_method(self):
        s = scored([0.1, 0.3, 0.55, 0.6, 0.9], [0, 0, 1, 0, 1])
        res = youden_threshold(s, method="youden-j")
        # oracle: argmax of TPR - FPR over candidates, smallest threshold on ties
        best_t, best_j = None, None
        for t in sorted(set(s.scores.tolist()) | {0.0, 1.0}):
            tpr = np.mean(s.scores[s.labels == 1] >= t)
            fpr = np.mean(s.scores[s.labels == 0] >= t)
            if best_j is None or tpr - fpr > best_j:
                best_t, best_j = t, tpr - fpr
        assert res.chosen_threshold == best_t
        assert res.method == "youden-j"

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            youden_threshold(scored([0.2, 0.8], [0, 1]), method="magic")

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            youden_threshold(scored([0.2, 0.8], [0, 0]))


class TestApplyThreshold:
    def test_zero_threshold_all_positive(self):
        out = apply_threshold(np.array([0.0, 0.3, 1.0]), 0.0)
        assert out.tolist() == [1, 1, 1]

    def test_above_max_all_negative(self):
        out = apply_threshold(np.array([0.1, 0.5, 0.89]), 0.9)
        assert out.tolist() == [0, 0, 0]

    def test_boundary_is_inclusive(self):
        out = apply_threshold(np.array([0.42, 0.41]), 0.42)
        assert out.tolist() == [1, 0]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            apply_threshold(np.array([0.5]), 1.5)

    def test_map_input_preserves_shape(self):
        probs = np.array([[0.1, 0.3], [0.6, 0.9]])
        m = TilMap(slide_id="s", patch_px=100, n_cols=2, n_rows=2,
                   probs=probs, model_id="m")
        b = apply_threshold(m, 0.5)
        assert b.cells.tolist() == [[0, 0], [1, 1]]
        assert b.threshold == 0.5
        assert b.source_map_id == m.map_id

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_positive_count_non_increasing_in_threshold(self, seed):
        rng = np.random.default_rng(seed)
        scores = rng.random(50)
        counts = [apply_threshold(scores, t).sum() for t in np.linspace(0, 1, 21)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


class TestThresholdCalibrator:
    def test_sklearn_params_roundtrip(self):
        cal = ThresholdCalibrator(method="youden-j")
        assert cal.get_params() == {"method": "youden-j"}
        cal.set_params(method="eer")
        assert cal.method == "eer"

    def test_fit_predict(self):
        cal = ThresholdCalibrator().fit([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
        assert cal.threshold_ == 0.8
        assert cal.auc_ == 1.0
        assert cal.predict([0.79, 0.8]).tolist() == [0, 1]

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            ThresholdCalibrator().predict([0.5])
