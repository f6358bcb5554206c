"""voxseg: preprocessing, slicing, ensembling, and evaluation utilities for
3-D brain-tumor segmentation built around an external 2-D model.

The package turns multi-modal MRI volumes into model-ready RGB slices,
reassembles per-slice predictions into volumes, majority-votes aligned
prediction sets, and scores results with exact Dice and 95% Hausdorff
metrics.  Loss and LR-schedule math used for training verification lives in
:mod:`voxseg.losses`.
"""

__version__ = "0.1.0"

from ._accel import backend as kernel_backend
from .augment import (
    AugmentPlan,
    AugmentPolicy,
    apply_augmentation,
    apply_plan,
    builtin_policy,
    plan_augmentation,
)
from .ensemble import DEFAULT_TIE_BREAK, EnsembleSet, MemberInfo, majority_vote, vote_histogram
from .errors import (
    AllZero,
    BadLabel,
    BadMagic,
    FormatError,
    IncompletePack,
    OutOfBounds,
    OutOfRange,
    RangeError,
    ShapeMismatch,
    TruncatedFile,
    UnknownPolicy,
    UnsupportedDatatype,
    VoxsegError,
)
from .losses import (
    LossWeights,
    LrSchedule,
    ScheduleKind,
    SoftPrediction,
    combined_mask_loss,
    combined_mask_loss_grad,
    cross_entropy_loss,
    cross_entropy_grad,
    focal_loss,
    focal_loss_grad,
    gradient_check,
    lr_at_epoch,
    soft_dice_loss,
    soft_dice_grad,
)
from .metrics import RegionMetrics, boundary_voxels, dice_coefficient, evaluate_subject, hausdorff95
from .niftio import read_volume, write_volume
from .preprocess import (
    CropBox,
    CropMode,
    RgbSlice,
    apply_crop,
    compute_crop_box,
    map_channels_rgb,
    normalize_minmax,
    resample_mask_nearest,
)
from .report import (
    COLUMNS,
    ComparisonTable,
    ModelSummary,
    build_comparison_table,
    render_comparison_table,
    render_csv,
    render_latex,
    render_text,
)
from .volume import (
    Axis,
    BinaryMask,
    DEFAULT_AXIS_MAP,
    Label,
    LabelVolume,
    Modality,
    Region,
    SlicePack,
    Volume,
    compose_region,
    extract_slices,
    reassemble,
    resolve_grid_axis,
)

__all__ = [name for name in dir() if not name.startswith("_")]
