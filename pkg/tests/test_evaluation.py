import csv
import json

import numpy as np
import pytest
from sklearn.metrics import accuracy_score, f1_score

from tilmapper import (
    Label,
    RegionRecord,
    TilDensity,
    evaluate_models,
    final_label_from_ratings,
    macro_f1,
    patch_metrics,
    region_count,
    region_distribution,
)
from tilmapper.errors import MissingThresholdError, RegionSizeError
from tilmapper.evaluation import region_cells, write_distribution_files
from tilmapper.synthetic import make_region_pixels
from conftest import make_manifest, make_record


class TestPatchMetrics:
    def test_perfect_predictions(self):
        m = patch_metrics([1, 0, 1, 0], [1, 0, 1, 0])
        assert m.accuracy == 1.0 and m.f1 == 1.0

    def test_hand_counted_confusion_matrix(self):
        # TP=1, FP=1, FN=1, TN=1
        m = patch_metrics([1, 0, 1, 0], [1, 1, 0, 0])
        assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 1)
        assert m.precision == 0.5
        assert m.recall == 0.5
        assert m.f1 == 0.5
        assert m.accuracy == 0.5

    def test_f1_undefined_marker_when_no_positive_anywhere(self):
        m = patch_metrics([0, 0, 0], [0, 0, 0])
        assert m.f1 is None
        assert m.precision is None
        assert m.recall is None
        assert m.accuracy == 1.0

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            patch_metrics([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            patch_metrics([1, 0], [1])

    def test_agrees_with_sklearn_oracle_on_random_cases(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            n = int(rng.integers(1, 60))
            pred = rng.integers(0, 2, n)
            true = rng.integers(0, 2, n)
            m = patch_metrics(pred, true)
            assert m.accuracy == pytest.approx(accuracy_score(true, pred), abs=1e-12)
            if m.f1 is not None:
                assert m.f1 == pytest.approx(
                    f1_score(true, pred, zero_division=0), abs=1e-12
                )
            else:
                assert pred.sum() == 0 and true.sum() == 0

    def test_macro_f1(self):
        pred, true = [1, 0, 1, 0], [1, 1, 0, 0]
        assert macro_f1(pred, true) == pytest.approx(
            f1_score(true, pred, average="macro"), abs=1e-12
        )


class TestEvaluateModels:
    @pytest.fixture()
    def scored_manifest(self, toy_eval_set):
        X, y = toy_eval_set
        records, store = [], {}
        types = ["LUAD", "BRCA", "STAD"]
        for i, (pixels, label) in enumerate(zip(X, y)):
            r = make_record(
                slide_id=f"s{i % 6}",
                patient_id=f"p{i % 6}",
                cancer_type=types[i % 3],
                grid_x=i,
                label=Label.TIL_POSITIVE if label else Label.TIL_NEGATIVE,
            )
            records.append(r)
            store[r.cell_key] = pixels
        manifest = make_manifest(records, name="eval")
        return manifest, (lambda record: store[record.cell_key])

    def test_report_shape_and_type_counts(self, toy_model, scored_manifest):
        manifest, loader = scored_manifest
        report = evaluate_models(
            {"toy": toy_model}, manifest, {"toy": 0.5}, patch_loader=loader
        )
        assert report.n_test == len(manifest)
        assert sum(report.per_type_counts.values()) == report.n_test
        assert set(report.per_cancer_type) == {"LUAD", "BRCA", "STAD"}
        row = report.per_model["toy"]
        assert row["accuracy"] >= 0.95
        assert row["auc"] >= 0.99

    def test_identical_models_identical_rows(self, toy_model, scored_manifest):
        manifest, loader = scored_manifest
        report = evaluate_models(
            {"a": toy_model, "b": toy_model}, manifest, {"a": 0.5, "b": 0.5},
            patch_loader=loader,
        )
        assert report.per_model["a"] == report.per_model["b"]
        for ct in report.per_cancer_type.values():
            assert ct["a"] == ct["b"]

    def test_overall_accuracy_is_count_weighted_mean_of_per_type(
        self, toy_model, scored_manifest
    ):
        manifest, loader = scored_manifest
        report = evaluate_models(
            {"toy": toy_model}, manifest, {"toy": 0.5}, patch_loader=loader
        )
        weighted = sum(
            report.per_cancer_type[ct]["toy"]["accuracy"] * report.per_type_counts[ct]
            for ct in report.per_cancer_type
        ) / report.n_test
        assert report.per_model["toy"]["accuracy"] == pytest.approx(weighted, abs=1e-12)

    def test_missing_threshold_rejected(self, toy_model, scored_manifest):
        manifest, loader = scored_manifest
        with pytest.raises(MissingThresholdError):
            evaluate_models({"toy": toy_model}, manifest, {}, patch_loader=loader)

    def test_report_json_roundtrip(self, toy_model, scored_manifest, tmp_path):
        manifest, loader = scored_manifest
        report = evaluate_models(
            {"toy": toy_model}, manifest, {"toy": 0.5}, patch_loader=loader
        )
        report.to_json(tmp_path / "report.json")
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["n_test"] == report.n_test
        assert data["per_model"]["toy"]["accuracy"] == report.per_model["toy"]["accuracy"]


class TestRegionCount:
    def test_wrong_region_size_rejected(self, toy_model):
        with pytest.raises(RegionSizeError):
            region_count(toy_model, np.zeros((400, 400, 3), dtype=np.uint8), 0.5)

    def test_region_cells_layout(self):
        region = np.zeros((800, 800, 3), dtype=np.uint8)
        region[100:200, 200:300] = 255  # cell (gy=1, gx=2) -> row-major index 10
        cells = region_cells(region)
        assert len(cells) == 64
        assert (cells[10] == 255).all()
        assert all(c.shape == (100, 100, 3) for c in cells)

    def test_counts_zero_and_full_against_model_scores(self, toy_model):
        rng = np.random.default_rng(40)
        all_neg = make_region_pixels(np.zeros((8, 8), dtype=bool), rng)
        all_pos = make_region_pixels(np.ones((8, 8), dtype=bool), rng)
        neg_scores = toy_model.score_patches(region_cells(all_neg))
        pos_scores = toy_model.score_patches(region_cells(all_pos))
        t_above_all = min(1.0, float(neg_scores.max()) + 1e-6)
        assert region_count(toy_model, all_neg, t_above_all) == 0
        t_below_all = max(0.0, float(pos_scores.min()) - 1e-6)
        assert region_count(toy_model, all_pos, t_below_all) == 64

    def test_equals_independent_per_cell_classification(self, toy_model):
        rng = np.random.default_rng(41)
        truth = rng.random((8, 8)) < 0.3
        region = make_region_pixels(truth, rng)
        t = 0.5
        # oracle: classify the 64 crops one at a time and count
        oracle = sum(toy_model.score(c) >= t for c in region_cells(region))
        assert region_count(toy_model, region, t) == oracle

    def test_non_increasing_in_threshold(self, toy_model):
        rng = np.random.default_rng(42)
        region = make_region_pixels(rng.random((8, 8)) < 0.5, rng)
        counts = [region_count(toy_model, region, t) for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert all(0 <= c <= 64 for c in counts)


class TestOrdinalLabels:
    def test_rounded_average_examples(self):
        assert final_label_from_ratings(["LOW", "MEDIUM", "MEDIUM"]) is TilDensity.MEDIUM
        assert final_label_from_ratings(["LOW", "LOW", "HIGH"]) is TilDensity.MEDIUM
        assert final_label_from_ratings(["HIGH", "HIGH", "MEDIUM"]) is TilDensity.HIGH

    def test_half_rounds_up(self):
        assert final_label_from_ratings(["LOW", "MEDIUM"]) is TilDensity.MEDIUM  # 0.5 -> 1
        assert final_label_from_ratings(["MEDIUM", "HIGH"]) is TilDensity.HIGH  # 1.5 -> 2

    def test_encoding(self):
        assert int(TilDensity.LOW) == 0
        assert int(TilDensity.MEDIUM) == 1
        assert int(TilDensity.HIGH) == 2

    def test_record_derives_final_label(self):
        r = RegionRecord(region_id="r1", expert_labels=["LOW", "HIGH"], predicted_count=10)
        assert r.final_label is TilDensity.MEDIUM

    def test_count_bounds_validated(self):
        with pytest.raises(ValueError):
            RegionRecord(region_id="r", expert_labels=["LOW"], predicted_count=65)


class TestRegionDistribution:
    def _records(self, low_counts, high_counts, medium_counts=()):
        records = []
        for i, c in enumerate(low_counts):
            records.append(RegionRecord(f"l{i}", ["LOW"], c))
        for i, c in enumerate(medium_counts):
            records.append(RegionRecord(f"m{i}", ["MEDIUM"], c))
        for i, c in enumerate(high_counts):
            records.append(RegionRecord(f"h{i}", ["HIGH"], c))
        return records

    def test_medians(self):
        dist = region_distribution(self._records([1, 2], [60, 62]))
        assert dist["LOW"].median == 1.5
        assert dist["HIGH"].median == 61

    def test_empty_class_is_empty_distribution(self):
        dist = region_distribution(self._records([1], [2]))
        assert dist["MEDIUM"].counts == ()
        assert dist["MEDIUM"].median is None

    def test_single_record_degenerate_quantiles(self):
        dist = region_distribution(self._records([7], []))
        s = dist["LOW"]
        assert s.minimum == s.q1 == s.median == s.q3 == s.maximum == 7

    def test_plot_files(self, tmp_path):
        dist = region_distribution(self._records([1, 2], [60], [30, 31, 32]))
        csv_path = tmp_path / "violins.csv"
        json_path = tmp_path / "violins.json"
        write_distribution_files(dist, csv_path, json_path)
        with csv_path.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["density_class", "predicted_count"]
        assert len(rows) == 1 + 6
        data = json.loads(json_path.read_text())
        assert data["MEDIUM"]["median"] == 31
