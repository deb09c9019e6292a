import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tilmapper import (
    AnnotationManifest,
    Label,
    MixturePolicy,
    PatchRecord,
    Source,
    Split,
    TilMap,
    assemble_mixture,
    check_patient_disjoint,
    harvest_semi_auto,
    manifest_stats,
    split_by_patient,
)
from tilmapper.errors import (
    DuplicateRecordError,
    EmptyMapError,
    PolicyCoverageError,
    SplitError,
)
from conftest import make_manifest, make_record

MANUAL_TYPES = ["BRCA", "COAD", "LUAD", "PAAD", "PRAD", "SKCM", "UCEC"]
SEMI_TYPES = ["CESC", "LUSC", "READ", "STAD"]


def make_map(probs, slide_id="sl", cancer_type="LUAD", patient_id="pat"):
    probs = np.asarray(probs, dtype=float)
    return TilMap(
        slide_id=slide_id,
        patch_px=100,
        n_cols=probs.shape[1],
        n_rows=probs.shape[0],
        probs=probs,
        model_id="m",
        cancer_type=cancer_type,
        patient_id=patient_id,
    )


class TestPatchRecord:
    def test_semi_auto_requires_origin_threshold(self):
        with pytest.raises(ValueError):
            make_record(source=Source.SEMI_AUTO)

    def test_manual_must_not_carry_origin_threshold(self):
        with pytest.raises(ValueError):
            make_record(source=Source.MANUAL, origin_threshold=0.4)

    def test_roundtrip_dict(self):
        r = make_record(source=Source.SEMI_AUTO, origin_threshold=0.3, grid_x=4)
        assert PatchRecord.from_dict(r.to_dict()) == r

    def test_manual_dict_omits_origin_threshold(self):
        assert "origin_threshold" not in make_record().to_dict()


class TestManifest:
    def test_duplicate_cell_rejected(self):
        with pytest.raises(DuplicateRecordError):
            make_manifest([make_record(grid_x=1), make_record(grid_x=1)])

    def test_jsonl_roundtrip(self, tmp_path):
        m = make_manifest(
            [
                make_record(grid_x=i, label=Label.TIL_POSITIVE if i % 2 else Label.TIL_NEGATIVE)
                for i in range(5)
            ]
        )
        path = tmp_path / "m.jsonl"
        m.save(path)
        loaded = AnnotationManifest.load(path)
        assert loaded.records == m.records
        # file is pure JSON-lines: one valid record object per line
        lines = path.read_text().splitlines()
        assert len(lines) == 5
        assert all(isinstance(json.loads(line), dict) for line in lines)

    def test_load_rejects_bad_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"slide_id": "x"}\n')
        with pytest.raises(ValueError):
            AnnotationManifest.load(path)


class TestHarvest:
    def test_sample_count(self):
        rng = np.random.default_rng(0)
        m = make_map(rng.random((25, 40)))  # 1000 cells
        records = harvest_semi_auto(m, 0.5, n_samples=120, rng_seed=1)
        assert len(records) == 120

    def test_capping_at_map_size(self):
        m = make_map(np.random.default_rng(0).random((5, 10)))  # 50 cells
        assert len(harvest_semi_auto(m, 0.5, n_samples=120, rng_seed=1)) == 50

    def test_all_zero_probs_all_negative(self):
        m = make_map(np.zeros((4, 5)))
        records = harvest_semi_auto(m, 0.2, n_samples=20, rng_seed=3)
        assert all(r.label is Label.TIL_NEGATIVE for r in records)

    def test_labels_rederivable_from_map_and_threshold(self):
        rng = np.random.default_rng(5)
        m = make_map(rng.random((12, 9)))
        records = harvest_semi_auto(m, 0.37, n_samples=80, rng_seed=9)
        for r in records:
            expected = m.probs[r.grid_y, r.grid_x] >= r.origin_threshold
            assert (r.label is Label.TIL_POSITIVE) == expected
            assert r.source is Source.SEMI_AUTO
            assert r.origin_threshold == 0.37

    def test_seed_determinism_byte_for_byte(self, tmp_path):
        rng = np.random.default_rng(5)
        m = make_map(rng.random((20, 20)))
        for i, seed in enumerate((7, 7)):
            records = harvest_semi_auto(m, 0.5, n_samples=50, rng_seed=seed)
            make_manifest(records, name="h").save(tmp_path / f"h{i}.jsonl")
        assert (tmp_path / "h0.jsonl").read_bytes() == (tmp_path / "h1.jsonl").read_bytes()

    def test_different_seed_differs(self):
        m = make_map(np.random.default_rng(5).random((20, 20)))
        a = harvest_semi_auto(m, 0.5, n_samples=50, rng_seed=1)
        b = harvest_semi_auto(m, 0.5, n_samples=50, rng_seed=2)
        assert a != b

    def test_no_duplicate_cells(self):
        m = make_map(np.random.default_rng(1).random((10, 10)))
        records = harvest_semi_auto(m, 0.5, n_samples=100, rng_seed=4)
        keys = {r.cell_key for r in records}
        assert len(keys) == len(records) == 100

    def test_stratified_balances_when_possible(self):
        probs = np.concatenate([np.full(50, 0.9), np.full(50, 0.1)]).reshape(10, 10)
        m = make_map(probs)
        records = harvest_semi_auto(m, 0.5, n_samples=40, rng_seed=2, stratified=True)
        n_pos = sum(r.label is Label.TIL_POSITIVE for r in records)
        assert len(records) == 40
        assert n_pos == 20

    def test_empty_map_and_bad_threshold(self):
        m = make_map(np.random.default_rng(0).random((2, 2)))
        with pytest.raises(ValueError):
            harvest_semi_auto(m, 1.5, 10, 0)
        with pytest.raises(ValueError):
            harvest_semi_auto(m, 0.5, 0, 0)
        empty = TilMap(slide_id="e", patch_px=100, n_cols=0, n_rows=0,
                       probs=np.zeros((0, 0)), model_id="m",
                       cancer_type="LUAD", patient_id="p")
        with pytest.raises(EmptyMapError):
            harvest_semi_auto(empty, 0.5, 10, 0)

    def test_requires_cancer_type_provenance(self):
        m = make_map(np.random.default_rng(0).random((2, 2)), cancer_type=None)
        with pytest.raises(ValueError):
            harvest_semi_auto(m, 0.5, 2, 0)
        records = harvest_semi_auto(m, 0.5, 2, 0, cancer_type="STAD")
        assert all(r.cancer_type.value == "STAD" for r in records)


class TestMixture:
    def test_manual_only_identity(self):
        manual = make_manifest(
            [make_record(cancer_type="LUAD", grid_x=i) for i in range(10)], name="manual"
        )
        semi = make_manifest([], name="semi")
        policy = MixturePolicy(manual_types={"LUAD"}, semi_types=set(), excluded_types=set())
        out = assemble_mixture(manual, semi, policy)
        assert out.records == manual.records

    def test_manual_wins_for_manual_types(self):
        # same 10 LUAD cells annotated by both routes -> all 10 come out MANUAL
        manual = make_manifest(
            [make_record(cancer_type="LUAD", grid_x=i) for i in range(10)], name="manual"
        )
        semi = make_manifest(
            [
                make_record(
                    cancer_type="LUAD", grid_x=i,
                    source=Source.SEMI_AUTO, origin_threshold=0.5,
                )
                for i in range(10)
            ],
            name="semi",
        )
        out = assemble_mixture(manual, semi)
        assert len(out) == 10
        assert all(r.source is Source.MANUAL for r in out)

    def test_excluded_type_dropped_not_error(self):
        manual = make_manifest([make_record(cancer_type="BLCA", grid_x=1)])
        semi = make_manifest(
            [make_record(cancer_type="STAD", grid_x=2, source=Source.SEMI_AUTO,
                         origin_threshold=0.4)]
        )
        out = assemble_mixture(manual, semi)
        assert len(out) == 1
        assert out.records[0].cancer_type.value == "STAD"

    def test_uncovered_type_is_error(self):
        policy = MixturePolicy(
            manual_types={"LUAD"}, semi_types={"STAD"}, excluded_types={"BLCA"}
        )
        manual = make_manifest([make_record(cancer_type="BRCA")])
        with pytest.raises(PolicyCoverageError):
            assemble_mixture(manual, make_manifest([]), policy)

    def test_policy_sets_must_be_disjoint(self):
        with pytest.raises(ValueError):
            MixturePolicy(manual_types={"LUAD"}, semi_types={"LUAD"}, excluded_types=set())

    def test_semi_per_type_cap(self):
        semi = make_manifest(
            [
                make_record(slide_id=f"s{i}", cancer_type=ct, grid_x=i,
                            source=Source.SEMI_AUTO, origin_threshold=0.5)
                for i, ct in enumerate(["STAD"] * 5 + ["READ"] * 3)
            ],
            name="semi",
        )
        out = assemble_mixture(
            make_manifest([], "man"), semi, semi_per_type_cap={"STAD": 2}
        )
        counts = {}
        for r in out:
            counts[r.cancer_type.value] = counts.get(r.cancer_type.value, 0) + 1
        assert counts == {"STAD": 2, "READ": 3}
        # first records in manifest order win
        assert sorted(r.slide_id for r in out if r.cancer_type.value == "STAD") == ["s0", "s1"]

    def test_default_policy_matches_annotation_availability(self):
        p = MixturePolicy()
        assert {t.value for t in p.manual_types} == set(MANUAL_TYPES)
        assert {t.value for t in p.semi_types} == set(SEMI_TYPES)
        assert {t.value for t in p.excluded_types} == {"BLCA"}

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_policy_soundness_property(self, data):
        all_types = MANUAL_TYPES + SEMI_TYPES + ["BLCA"]
        n_manual = data.draw(st.integers(0, 25))
        n_semi = data.draw(st.integers(0, 25))
        manual_records, semi_records = [], []
        for i in range(n_manual):
            ct = data.draw(st.sampled_from(all_types))
            manual_records.append(
                make_record(slide_id=f"sm{i}", patient_id=f"pm{i}", cancer_type=ct)
            )
        for i in range(n_semi):
            ct = data.draw(st.sampled_from(all_types))
            semi_records.append(
                make_record(
                    slide_id=f"ss{i}", patient_id=f"ps{i}", cancer_type=ct,
                    source=Source.SEMI_AUTO, origin_threshold=0.5,
                )
            )
        policy = MixturePolicy()
        out = assemble_mixture(
            make_manifest(manual_records, "man"), make_manifest(semi_records, "semi"), policy
        )
        for r in out:
            assert r.cancer_type not in policy.excluded_types
            if r.cancer_type in policy.manual_types:
                assert r.source is Source.MANUAL
            if r.cancer_type in policy.semi_types:
                assert r.source is Source.SEMI_AUTO
        kept_manual = sum(1 for r in manual_records if r.cancer_type in policy.manual_types)
        kept_semi = sum(1 for r in semi_records if r.cancer_type in policy.semi_types)
        assert len(out) == kept_manual + kept_semi


class TestSplitByPatient:
    def _manifest_with_patients(self, n_patients, patches_each=10):
        records = []
        for p in range(n_patients):
            for i in range(patches_each):
                records.append(
                    make_record(
                        slide_id=f"slide-{p}", patient_id=f"patient-{p}", grid_x=i
                    )
                )
        return make_manifest(records)

    def test_partition_sizes_and_disjointness(self):
        m = self._manifest_with_patients(10)
        train, test = split_by_patient([m], test_fraction=0.3, rng_seed=123)
        assert len(train.patient_ids) == 7
        assert len(test.patient_ids) == 3
        assert not (train.patient_ids & test.patient_ids)
        assert len(train) + len(test) == 100

    def test_every_patient_entirely_on_one_side(self):
        m = self._manifest_with_patients(8, patches_each=7)
        train, test = split_by_patient([m], 0.5, rng_seed=3)
        for r in train:
            assert r.patient_id not in test.patient_ids
        for r in test:
            assert r.patient_id not in train.patient_ids

    def test_reproducible_under_seed(self):
        m = self._manifest_with_patients(12)
        a = split_by_patient([m], 0.25, rng_seed=9)
        b = split_by_patient([m], 0.25, rng_seed=9)
        assert a[0].records == b[0].records
        assert a[1].records == b[1].records

    def test_single_patient_rejected(self):
        m = self._manifest_with_patients(1, patches_each=100)
        with pytest.raises(SplitError):
            split_by_patient([m], 0.5, rng_seed=0)

    def test_bad_fraction_rejected(self):
        m = self._manifest_with_patients(4)
        for frac in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError):
                split_by_patient([m], frac, rng_seed=0)

    def test_splits_assigned(self):
        m = self._manifest_with_patients(4)
        train, test = split_by_patient([m], 0.5, rng_seed=1)
        assert train.split is Split.TRAIN
        assert test.split is Split.TEST

    def test_check_patient_disjoint_detects_overlap(self):
        a = make_manifest([make_record(patient_id="p1")], name="a")
        b = make_manifest([make_record(patient_id="p1", grid_x=5)], name="b")
        with pytest.raises(SplitError):
            check_patient_disjoint(a, b)


class TestManifestStats:
    def test_counts(self):
        records = [
            make_record(grid_x=i, label=Label.TIL_POSITIVE) for i in range(3)
        ] + [make_record(grid_x=10 + i, label=Label.TIL_NEGATIVE) for i in range(2)]
        stats = manifest_stats(make_manifest(records))
        assert stats.total == 5
        assert stats.by_label == {"TIL_POSITIVE": 3, "TIL_NEGATIVE": 2}
        assert stats.by_source == {"MANUAL": 5}
        assert sum(stats.by_cancer_type.values()) == 5

    def test_empty_manifest(self):
        stats = manifest_stats(make_manifest([]))
        assert stats.total == 0
        assert stats.by_label == {}
        assert stats.by_source == {}
        assert stats.by_cancer_type == {}
