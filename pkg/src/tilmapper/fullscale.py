"""Reference operating points and results from the full-scale runs of this method.

These numbers depend on the full ~400K-patch annotation corpus, pretrained
full-scale networks, and the released production map collection; they are NOT
reproducible at desk scale and are recorded here as documentation targets
only. Nothing in this module is asserted by the test suite.
"""

# Fixed decision thresholds selected on the 652-patch validation set.
FULL_SCALE_THRESHOLDS = {
    "vgg-mix": 0.42,
    "incep-mix": 0.10,
    "baseline-grayscale": 0.26,
}

# Manually annotated training corpus: label breakdown and per-type patch counts.
MANUAL_CORPUS_TOTAL = 86_154
MANUAL_CORPUS_NEGATIVES = 64_381
MANUAL_CORPUS_POSITIVES = 21_773
MANUAL_CORPUS_BY_TYPE = {
    "BRCA": 2_900,
    "COAD": 4_000,
    "LUAD": 32_000,
    "PAAD": 1_900,
    "PRAD": 5_500,
    "SKCM": 34_000,
    "UCEC": 5_400,
}

# Semi-automatic harvest: ~120 patches per slide over 2,500 slides -> ~301K
# records, of which ~69K (the types without manual annotations) enter the
# mixed training set.
SEMI_AUTO_PATCHES_PER_SLIDE = 120
SEMI_AUTO_SLIDES = 2_500
SEMI_AUTO_CORPUS_TOTAL = 301_000
SEMI_AUTO_MIXTURE_SUBSET = 69_000

# Overall patch-level test results (900-patch multi-type test set):
# model -> (f1, accuracy, auc)
FULL_SCALE_PATCH_EVAL = {
    "baseline-hitl": (0.85, 0.7956, 0.798),
    "baseline-grayscale-fixed": (0.85, 0.7822, 0.798),
    "vgg-manual": (0.87, 0.8244, 0.899),
    "incep-manual": (0.87, 0.8244, 0.890),
    "vgg-semi": (0.85, 0.8033, 0.870),
    "incep-semi": (0.84, 0.7856, 0.866),
    "vgg-all": (0.87, 0.8167, 0.878),
    "incep-all": (0.87, 0.8189, 0.885),
    "vgg-mix": (0.88, 0.8422, 0.900),
    "incep-mix": (0.88, 0.8322, 0.903),
}

# The fixed-threshold baseline at a default 0.5 instead of its calibrated
# threshold: accuracy drops 78.22% -> 70.22%, f1 drops 0.85 -> 0.76.
BASELINE_AT_DEFAULT_THRESHOLD = (0.76, 0.7022)
