from .augment import augment, dihedral, hsl_jitter, resize_patch, resize_pixels, shift_window
from .classifier import (
    FilePatchLoader,
    TilPatchClassifier,
    load_checkpoint,
    load_manifest_patches,
    predict_batch,
    save_checkpoint,
    train,
)
from .config import (
    ARCH_INPUT_PX,
    Architecture,
    AugmentationConfig,
    COMPACT_REF_PRESET,
    ModelConfig,
    PRESETS,
    Preset,
    resolve_preset,
)
from .gradcheck import GradCheckResult, gradient_check
from .networks import CompactRefNet, InceptionV4Class, Vgg16Class, build_network

__all__ = [
    "ARCH_INPUT_PX",
    "Architecture",
    "AugmentationConfig",
    "COMPACT_REF_PRESET",
    "CompactRefNet",
    "FilePatchLoader",
    "GradCheckResult",
    "InceptionV4Class",
    "ModelConfig",
    "PRESETS",
    "Preset",
    "TilPatchClassifier",
    "Vgg16Class",
    "augment",
    "build_network",
    "dihedral",
    "gradient_check",
    "hsl_jitter",
    "load_checkpoint",
    "load_manifest_patches",
    "predict_batch",
    "resize_patch",
    "resize_pixels",
    "resolve_preset",
    "save_checkpoint",
    "shift_window",
    "train",
]
