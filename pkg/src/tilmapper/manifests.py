"""Annotation manifests: JSON-lines patch records, weak-label harvesting,
training-set mixing, and patient-level train/test splitting.

Manifest files are JSON-lines, one record per line, UTF-8 — line-oriented for
streaming and diff-friendliness. This file format is the contract shared with
training, evaluation, and the review service.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DuplicateRecordError, EmptyMapError, PolicyCoverageError, SplitError
from .maps import TilMap
from .tiling import CancerType
from .validation import check_fraction, check_threshold


class Label(str, Enum):
    TIL_POSITIVE = "TIL_POSITIVE"
    TIL_NEGATIVE = "TIL_NEGATIVE"


class Source(str, Enum):
    MANUAL = "MANUAL"
    SEMI_AUTO = "SEMI_AUTO"


class Split(str, Enum):
    TRAIN = "TRAIN"
    VALIDATION = "VALIDATION"
    TEST = "TEST"


@dataclass(frozen=True)
class PatchRecord:
    """One annotated patch: grid location, label, and provenance."""

    slide_id: str
    patient_id: str
    cancer_type: CancerType
    grid_x: int
    grid_y: int
    label: Label
    source: Source
    origin_threshold: float | None = None
    patch_uri: str = ""

    def __post_init__(self):
        object.__setattr__(self, "cancer_type", CancerType.coerce(self.cancer_type))
        object.__setattr__(self, "label", Label(self.label))
        object.__setattr__(self, "source", Source(self.source))
        if self.source is Source.SEMI_AUTO:
            if self.origin_threshold is None:
                raise ValueError("SEMI_AUTO records must carry origin_threshold")
            check_threshold(self.origin_threshold)
        elif self.origin_threshold is not None:
            raise ValueError("MANUAL records must not carry origin_threshold")

    @property
    def cell_key(self) -> tuple[str, int, int]:
        return (self.slide_id, self.grid_x, self.grid_y)

    def to_dict(self) -> dict:
        d = {
            "slide_id": self.slide_id,
            "patient_id": self.patient_id,
            "cancer_type": self.cancer_type.value,
            "grid_x": self.grid_x,
            "grid_y": self.grid_y,
            "label": self.label.value,
            "source": self.source.value,
            "patch_uri": self.patch_uri,
        }
        if self.origin_threshold is not None:
            d["origin_threshold"] = self.origin_threshold
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PatchRecord":
        return cls(
            slide_id=d["slide_id"],
            patient_id=d["patient_id"],
            cancer_type=d["cancer_type"],
            grid_x=int(d["grid_x"]),
            grid_y=int(d["grid_y"]),
            label=d["label"],
            source=d["source"],
            origin_threshold=d.get("origin_threshold"),
            patch_uri=d.get("patch_uri", ""),
        )


@dataclass
class AnnotationManifest:
    """Ordered collection of patch records with a split assignment.

    The split/name are in-memory metadata; serialization is records only
    (pure JSON-lines), so files from any producer interoperate.
    """

    name: str
    records: list[PatchRecord]
    split: Split = Split.TRAIN

    def __post_init__(self):
        self.split = Split(self.split)
        seen: set[tuple[str, int, int]] = set()
        for r in self.records:
            if r.cell_key in seen:
                raise DuplicateRecordError(
                    f"manifest {self.name!r}: duplicate record for cell {r.cell_key}"
                )
            seen.add(r.cell_key)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PatchRecord]:
        return iter(self.records)

    @property
    def patient_ids(self) -> set[str]:
        return {r.patient_id for r in self.records}

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load(
        cls,
        path: str | Path,
        name: str | None = None,
        split: Split = Split.TRAIN,
    ) -> "AnnotationManifest":
        path = Path(path)
        records = []
        with path.open("r", encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(PatchRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise ValueError(f"{path}:{i + 1}: bad record: {exc}") from exc
        return cls(name=name or path.stem, records=records, split=split)


@dataclass(frozen=True)
class MixturePolicy:
    """Which annotation source feeds the training set, per cancer type."""

    manual_types: frozenset[CancerType] = frozenset(
        {CancerType.BRCA, CancerType.COAD, CancerType.LUAD, CancerType.PAAD,
         CancerType.PRAD, CancerType.SKCM, CancerType.UCEC}
    )
    semi_types: frozenset[CancerType] = frozenset(
        {CancerType.CESC, CancerType.LUSC, CancerType.READ, CancerType.STAD}
    )
    excluded_types: frozenset[CancerType] = frozenset({CancerType.BLCA})

    def __post_init__(self):
        coerce = lambda s: frozenset(CancerType.coerce(t) for t in s)
        object.__setattr__(self, "manual_types", coerce(self.manual_types))
        object.__setattr__(self, "semi_types", coerce(self.semi_types))
        object.__setattr__(self, "excluded_types", coerce(self.excluded_types))
        sets = (self.manual_types, self.semi_types, self.excluded_types)
        total = sum(len(s) for s in sets)
        if len(frozenset().union(*sets)) != total:
            raise ValueError("mixture policy sets must be pairwise disjoint")

    @classmethod
    def from_dict(cls, d: dict) -> "MixturePolicy":
        return cls(
            manual_types=frozenset(d.get("manual_types", [])),
            semi_types=frozenset(d.get("semi_types", [])),
            excluded_types=frozenset(d.get("excluded_types", [])),
        )

    def to_dict(self) -> dict:
        return {
            "manual_types": sorted(t.value for t in self.manual_types),
            "semi_types": sorted(t.value for t in self.semi_types),
            "excluded_types": sorted(t.value for t in self.excluded_types),
        }


def harvest_semi_auto(
    til_map: TilMap,
    threshold: float,
    n_samples: int,
    rng_seed: int,
    *,
    stratified: bool = False,
    patient_id: str | None = None,
    cancer_type: str | CancerType | None = None,
    patch_uri_template: str = "{slide_id}_{grid_x}_{grid_y}.png",
) -> list[PatchRecord]:
    """Sample cells from a thresholded probability map as weak annotations.

    Uniform without replacement over all map cells, reproducible under
    ``rng_seed``; each record's label is TIL_POSITIVE iff the cell probability
    is >= threshold. ``stratified=True`` balances positives/negatives per map
    (half the budget each, backfilled from the other side when one is short).

    Patient/cancer-type provenance comes from the map header unless overridden;
    a map with no patient metadata falls back to one patient per slide.
    """
    threshold = check_threshold(threshold)
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    n_cells = til_map.n_cells
    if n_cells == 0:
        raise EmptyMapError(f"map {til_map.map_id} has no cells")

    cancer = CancerType.coerce(cancer_type or til_map.cancer_type or "")
    patient = patient_id or til_map.patient_id or til_map.slide_id

    flat = til_map.probs.reshape(-1)
    k = min(n_samples, n_cells)
    rng = np.random.default_rng(rng_seed)
    if not stratified:
        chosen = np.sort(rng.choice(n_cells, size=k, replace=False))
    else:
        pos_idx = np.flatnonzero(flat >= threshold)
        neg_idx = np.flatnonzero(flat < threshold)
        take_pos = min(len(pos_idx), k // 2 + (k % 2))
        take_neg = min(len(neg_idx), k - take_pos)
        take_pos = min(len(pos_idx), k - take_neg)  # backfill if negatives were short
        parts = []
        if take_pos:
            parts.append(rng.choice(pos_idx, size=take_pos, replace=False))
        if take_neg:
            parts.append(rng.choice(neg_idx, size=take_neg, replace=False))
        chosen = np.sort(np.concatenate(parts)) if parts else np.array([], dtype=int)

    records = []
    for idx in chosen:
        gy, gx = divmod(int(idx), til_map.n_cols)
        prob = flat[idx]
        records.append(
            PatchRecord(
                slide_id=til_map.slide_id,
                patient_id=patient,
                cancer_type=cancer,
                grid_x=gx,
                grid_y=gy,
                label=Label.TIL_POSITIVE if prob >= threshold else Label.TIL_NEGATIVE,
                source=Source.SEMI_AUTO,
                origin_threshold=threshold,
                patch_uri=patch_uri_template.format(
                    slide_id=til_map.slide_id, grid_x=gx, grid_y=gy
                ),
            )
        )
    return records


def assemble_mixture(
    manual: AnnotationManifest,
    semi: AnnotationManifest,
    policy: MixturePolicy | None = None,
    name: str = "mixture",
    semi_per_type_cap: dict | None = None,
) -> AnnotationManifest:
    """Combine manual and semi-automatic manifests under a per-type source policy.

    Keeps manual records for manual_types, semi records for semi_types, and
    drops excluded_types entirely. A record whose type is in no policy set is
    an error. If the same cell somehow survives from both inputs, the manual
    copy wins. ``semi_per_type_cap`` optionally limits how many semi records
    each cancer type contributes (first records in manifest order win, so the
    result is deterministic).
    """
    policy = policy or MixturePolicy()
    covered = policy.manual_types | policy.semi_types | policy.excluded_types
    caps = {CancerType.coerce(k): int(v) for k, v in (semi_per_type_cap or {}).items()}

    def check_covered(r: PatchRecord):
        if r.cancer_type not in covered:
            raise PolicyCoverageError(
                f"record {r.cell_key} has cancer type {r.cancer_type.value} "
                "not covered by any policy set"
            )

    out: dict[tuple[str, int, int], PatchRecord] = {}
    for r in manual.records:
        check_covered(r)
        if r.cancer_type in policy.manual_types:
            if r.cell_key in out:
                raise DuplicateRecordError(f"duplicate manual record {r.cell_key}")
            out[r.cell_key] = r
    kept_semi: dict[CancerType, int] = {}
    for r in semi.records:
        check_covered(r)
        if r.cancer_type in policy.semi_types and r.cell_key not in out:
            if r.cancer_type in caps and kept_semi.get(r.cancer_type, 0) >= caps[r.cancer_type]:
                continue
            kept_semi[r.cancer_type] = kept_semi.get(r.cancer_type, 0) + 1
            out[r.cell_key] = r
    return AnnotationManifest(name=name, records=list(out.values()), split=Split.TRAIN)


def split_by_patient(
    manifests: Sequence[AnnotationManifest],
    test_fraction: float,
    rng_seed: int,
) -> tuple[AnnotationManifest, AnnotationManifest]:
    """Partition records into train/test so every patient lands entirely on one side."""
    check_fraction(test_fraction, "test_fraction")
    records = [r for m in manifests for r in m.records]
    patients = sorted({r.patient_id for r in records})
    if len(patients) < 2:
        raise SplitError(
            f"cannot split {len(patients)} patient(s) into train and test"
        )
    rng = np.random.default_rng(rng_seed)
    shuffled = list(patients)
    rng.shuffle(shuffled)
    n_test = int(round(len(patients) * test_fraction))
    n_test = min(max(n_test, 1), len(patients) - 1)
    test_patients = set(shuffled[:n_test])

    train = AnnotationManifest(
        name="train",
        records=[r for r in records if r.patient_id not in test_patients],
        split=Split.TRAIN,
    )
    test = AnnotationManifest(
        name="test",
        records=[r for r in records if r.patient_id in test_patients],
        split=Split.TEST,
    )
    check_patient_disjoint(train, test)
    return train, test


def check_patient_disjoint(train: AnnotationManifest, test: AnnotationManifest) -> None:
    overlap = train.patient_ids & test.patient_ids
    if overlap:
        raise SplitError(
            f"train/test patient sets overlap: {sorted(overlap)[:5]}"
            f"{'...' if len(overlap) > 5 else ''}"
        )


@dataclass(frozen=True)
class ManifestStats:
    total: int
    by_label: dict
    by_source: dict
    by_cancer_type: dict

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "by_label": dict(self.by_label),
            "by_source": dict(self.by_source),
            "by_cancer_type": dict(self.by_cancer_type),
        }


def manifest_stats(m: AnnotationManifest) -> ManifestStats:
    """Counts per label, per source, and per cancer type (all sum to the total)."""
    by_label: dict[str, int] = {}
    by_source: dict[str, int] = {}
    by_type: dict[str, int] = {}
    for r in m.records:
        by_label[r.label.value] = by_label.get(r.label.value, 0) + 1
        by_source[r.source.value] = by_source.get(r.source.value, 0) + 1
        by_type[r.cancer_type.value] = by_type.get(r.cancer_type.value, 0) + 1
    return ManifestStats(
        total=len(m.records),
        by_label=by_label,
        by_source=by_source,
        by_cancer_type=dict(sorted(by_type.items())),
    )
