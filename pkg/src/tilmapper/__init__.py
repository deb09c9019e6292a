"""tilmapper: patch-level tumor-infiltrating-lymphocyte mapping.

Pipeline pieces: slide tiling, annotation manifests with weak-label
harvesting, patch-classifier training, ROC threshold calibration, per-slide
probability maps, patch/region evaluation, and the threshold-review service.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibrationResult,
    RocCurve,
    RocPoint,
    ScoredSet,
    ThresholdCalibrator,
    apply_threshold,
    auc_score,
    roc_curve,
    youden_threshold,
)
from .errors import TilmapperError
from .evaluation import (
    EvalReport,
    PatchMetrics,
    RegionRecord,
    TilDensity,
    evaluate_models,
    final_label_from_ratings,
    macro_f1,
    patch_metrics,
    region_count,
    region_distribution,
)
from .manifests import (
    AnnotationManifest,
    Label,
    ManifestStats,
    MixturePolicy,
    PatchRecord,
    Source,
    Split,
    assemble_mixture,
    check_patient_disjoint,
    harvest_semi_auto,
    manifest_stats,
    split_by_patient,
)
from .maps import BinaryTilMap, TilMap, import_grayscale_map, infer_map, read_map, write_map
from .models import (
    Architecture,
    AugmentationConfig,
    ModelConfig,
    TilPatchClassifier,
    augment,
    gradient_check,
    load_checkpoint,
    predict_batch,
    resize_patch,
    save_checkpoint,
    train,
)
from .tiling import (
    ArraySource,
    CancerType,
    PatchImage,
    SlideRef,
    TileGrid,
    TissueFilterParams,
    build_grid,
    extract_patch,
    open_pixel_source,
    tissue_filter,
)

__all__ = [
    "AnnotationManifest",
    "Architecture",
    "ArraySource",
    "AugmentationConfig",
    "BinaryTilMap",
    "CalibrationResult",
    "CancerType",
    "EvalReport",
    "Label",
    "ManifestStats",
    "MixturePolicy",
    "ModelConfig",
    "PatchImage",
    "PatchMetrics",
    "PatchRecord",
    "RegionRecord",
    "RocCurve",
    "RocPoint",
    "ScoredSet",
    "SlideRef",
    "Source",
    "Split",
    "ThresholdCalibrator",
    "TilDensity",
    "TilMap",
    "TilPatchClassifier",
    "TileGrid",
    "TilmapperError",
    "TissueFilterParams",
    "apply_threshold",
    "assemble_mixture",
    "auc_score",
    "augment",
    "build_grid",
    "check_patient_disjoint",
    "evaluate_models",
    "extract_patch",
    "final_label_from_ratings",
    "gradient_check",
    "harvest_semi_auto",
    "import_grayscale_map",
    "infer_map",
    "load_checkpoint",
    "macro_f1",
    "manifest_stats",
    "open_pixel_source",
    "patch_metrics",
    "predict_batch",
    "read_map",
    "region_count",
    "region_distribution",
    "resize_patch",
    "roc_curve",
    "save_checkpoint",
    "split_by_patient",
    "tissue_filter",
    "train",
    "write_map",
    "youden_threshold",
]
