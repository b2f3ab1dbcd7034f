"""Mueller-matrix image cube toolkit.

Core pipeline: load or synthesize per-pixel Mueller matrices, test and
repair physical realizability through the coherency matrix, decompose
each pixel into depolarization/retardance/diattenuation parameter maps,
augment cubes with exact frame-consistent spatial transforms or element
dropout, and evaluate segmentations with the few-shot protocol tooling.
"""

__version__ = "0.1.0"

from .errors import (
    BadHeaderError,
    BadMagicError,
    DegenerateNoReconstructionError,
    DimensionMismatchError,
    DOutOfRangeError,
    M00NonPositiveError,
    MaskedInputError,
    MissingPlaneError,
    MuellerKitError,
    NoConvergenceError,
    NotHermitianError,
    TooFewSpecimensError,
    TruncatedError,
)
from .polcore import (
    ElementMask,
    EPS_M00,
    LuChipmanMaps,
    LuChipmanPixel,
    MASK_FIRST_ROW_COL,
    MASK_FULL,
    MASK_LINEAR_ONLY,
    MASK_PRESETS,
    MASK_UL3X3,
    MuellerCube,
    PixelStatus,
    compose,
    make_diagonal_depolarizer,
    make_diattenuator,
    make_linear_retarder,
    make_rotator,
    normalize,
    normalize_cube,
)
from .realizability import (
    CLIP_EIGENVALUE,
    CubeScanReport,
    RealizabilityReport,
    TOL_PHYS,
    from_coherency,
    hermitian_eigen,
    is_physical,
    project_cube,
    project_physical,
    scan_cube,
    to_coherency,
)
from .luchipman import (
    DecomposeOptions,
    decompose_cube,
    decompose_pixel,
    diattenuation,
    polarizance,
    reconstruct,
)
from .augment import (
    ALL_TRANSFORMS,
    SpatialTransform,
    apply_mask,
    augment_params,
    parse_mask,
    rotate_cube,
    rotate_frame,
)
from .dataio import (
    PlaneKind,
    ValidationReport,
    map_plane_path,
    plane_to_png,
    read_cube,
    read_maps,
    read_plane,
    validate_file,
    write_cube,
    write_maps,
    write_plane,
)
from .evalkit import (
    BinaryConfusion,
    ClassificationMetrics,
    NestedSplit,
    SplitRng,
    SplitSpec,
    aggregate,
    classify_metrics,
    dice,
    fewshot_indices,
    macro_dice,
    metrics_csv,
    nested_cv_splits,
    shuffled_indices,
    train_val_test_split,
)

__all__ = [name for name in dir() if not name.startswith("_")]
