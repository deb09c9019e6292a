import numpy as np
import pytest

from tilmapper import AnnotationManifest, Label, PatchRecord, Source, TilPatchClassifier
from tilmapper.models import AugmentationConfig, ModelConfig
from tilmapper.synthetic import make_patch_set


def make_record(
    slide_id="slide-0",
    patient_id="patient-0",
    cancer_type="LUAD",
    grid_x=0,
    grid_y=0,
    label=Label.TIL_NEGATIVE,
    source=Source.MANUAL,
    origin_threshold=None,
    patch_uri="",
):
    return PatchRecord(
        slide_id=slide_id,
        patient_id=patient_id,
        cancer_type=cancer_type,
        grid_x=grid_x,
        grid_y=grid_y,
        label=label,
        source=source,
        origin_threshold=origin_threshold,
        patch_uri=patch_uri,
    )


def make_manifest(records, name="m", split="TRAIN"):
    return AnnotationManifest(name=name, records=list(records), split=split)


@pytest.fixture(scope="session")
def toy_model():
    """COMPACT_REF trained once on synthetic separable patches; shared across tests."""
    rng = np.random.default_rng(11)
    X, y = make_patch_set(120, 120, rng, patch_px=100)
    cfg = ModelConfig(max_steps=250, batch_size=32, rng_seed=5)
    aug = AugmentationConfig(shift_px_max=8, rng_seed=5)
    return TilPatchClassifier(config=cfg, augmentation=aug).fit(X, y)


@pytest.fixture(scope="session")
def toy_eval_set():
    """Held-out synthetic patches for the shared toy model."""
    rng = np.random.default_rng(12)
    return make_patch_set(60, 60, rng, patch_px=100)
