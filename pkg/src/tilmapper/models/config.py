"""Model and augmentation configuration, plus the named training presets."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum


class Architecture(str, Enum):
    COMPACT_REF = "COMPACT_REF"
    VGG16_CLASS = "VGG16_CLASS"
    INCEPTION_V4_CLASS = "INCEPTION_V4_CLASS"


ARCH_INPUT_PX = {
    Architecture.COMPACT_REF: 64,
    Architecture.VGG16_CLASS: 224,
    Architecture.INCEPTION_V4_CLASS: 299,
}


@dataclass
class ModelConfig:
    """Architecture choice and optimizer recipe.

    The full-scale recipe: Adam at learning rate 0.0005, batch size 128, no
    batch normalization, single sigmoid output head. Stopping is a fixed step
    budget with best-validation-AUC checkpoint selection when a validation set
    is supplied. Pretrained weights are an optional external input; training
    runs from random initialization when absent.
    """

    architecture: Architecture = Architecture.COMPACT_REF
    input_size_px: int | None = None
    pretrained_weights: str | None = None
    learning_rate: float = 0.0005
    batch_size: int = 128
    max_steps: int = 1000
    batch_norm: bool = False
    weight_decay: float = 0.0
    oversample_positives: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        self.architecture = Architecture(self.architecture)
        required = ARCH_INPUT_PX[self.architecture]
        if self.input_size_px is None:
            self.input_size_px = required
        elif self.input_size_px != required:
            raise ValueError(
                f"{self.architecture.value} requires input_size_px={required}, "
                f"got {self.input_size_px}"
            )
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.max_steps < 1:
            raise ValueError("batch_size and max_steps must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["architecture"] = self.architecture.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class AugmentationConfig:
    """Stochastic training augmentations: pixel shift with reflection fill,
    the 8 dihedral rotate/flip variants, and bounded hue/saturation/lightness
    jitter. Shifts are drawn uniformly from [-shift_px_max, +shift_px_max]
    per axis."""

    shift_px_max: int = 20
    rotate_flip: bool = True
    hue_deg_max: float = 5.0
    sat_frac_max: float = 0.10
    light_frac_max: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.shift_px_max < 0:
            raise ValueError("shift_px_max must be >= 0")
        if min(self.hue_deg_max, self.sat_frac_max, self.light_frac_max) < 0:
            raise ValueError("jitter magnitudes must be >= 0")

    @classmethod
    def disabled(cls, rng_seed: int = 0) -> "AugmentationConfig":
        return cls(
            shift_px_max=0,
            rotate_flip=False,
            hue_deg_max=0.0,
            sat_frac_max=0.0,
            light_frac_max=0.0,
            rng_seed=rng_seed,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentationConfig":
        return cls(**d)


@dataclass(frozen=True)
class Preset:
    """A named (architecture, training-set recipe) pair."""

    name: str
    architecture: Architecture
    training_set: str


# The eight full-scale model/training-set combinations this pipeline compares.
PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("vgg-manual", Architecture.VGG16_CLASS, "86K manually annotated"),
        Preset("incep-manual", Architecture.INCEPTION_V4_CLASS, "86K manually annotated"),
        Preset("vgg-semi", Architecture.VGG16_CLASS, "301K semi-automatically annotated"),
        Preset("incep-semi", Architecture.INCEPTION_V4_CLASS, "301K semi-automatically annotated"),
        Preset("vgg-all", Architecture.VGG16_CLASS, "301K semi-automatic + 86K manual"),
        Preset("incep-all", Architecture.INCEPTION_V4_CLASS, "301K semi-automatic + 86K manual"),
        Preset("vgg-mix", Architecture.VGG16_CLASS, "69K semi-automatic + 86K manual mixture"),
        Preset("incep-mix", Architecture.INCEPTION_V4_CLASS, "69K semi-automatic + 86K manual mixture"),
    )
}

# Desk-scale reference preset: trainable on CPU without pretrained weights.
COMPACT_REF_PRESET = Preset("compact-ref", Architecture.COMPACT_REF, "synthetic desk-scale set")


def resolve_preset(name: str) -> Preset:
    key = name.lower()
    if key == COMPACT_REF_PRESET.name:
        return COMPACT_REF_PRESET
    if key in PRESETS:
        return PRESETS[key]
    raise ValueError(
        f"unknown preset {name!r}; expected one of "
        f"{sorted(PRESETS) + [COMPACT_REF_PRESET.name]}"
    )
