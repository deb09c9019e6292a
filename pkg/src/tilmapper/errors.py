"""Exception types shared across the package.

Each error class marks a distinct failure mode so callers (and the CLI /
HTTP layers) can map them to specific exit codes / status codes instead of
string-matching messages.
"""


class TilmapperError(Exception):
    """Base class for all package-specific errors."""


class EmptyGridError(TilmapperError):
    """Slide is smaller than a single patch; tiling would produce no cells."""


class OutOfBoundsError(TilmapperError):
    """Requested grid coordinates fall outside the tile grid."""


class UnreadableSourceError(TilmapperError):
    """Pixel source path could not be opened or decoded."""


class SourceFormatError(TilmapperError):
    """Pixel source exists but is not in the expected format (e.g. not RGB)."""


class DuplicateRecordError(TilmapperError):
    """Two records address the same (slide_id, grid_x, grid_y) cell."""


class PolicyCoverageError(TilmapperError):
    """A record's cancer type is not covered by any mixture-policy set."""


class SplitError(TilmapperError):
    """Patient-level split cannot be performed (e.g. fewer than 2 patients)."""


class EmptyMapError(TilmapperError):
    """Operation requires a non-empty probability map."""


class SingleClassError(TilmapperError):
    """Operation requires both positive and negative examples."""


class TrainingDivergedError(TilmapperError):
    """Training loss became non-finite; aborted with diagnostics."""


class MapFormatError(TilmapperError):
    """Map file is malformed: bad header, geometry/payload mismatch, or
    probability outside [0, 1]."""


class RegionSizeError(TilmapperError):
    """Region image does not have the exact expected pixel dimensions."""


class MissingThresholdError(TilmapperError):
    """A model was submitted for evaluation without a calibrated threshold."""


class CommitConflictError(TilmapperError):
    """A review session was committed twice."""
