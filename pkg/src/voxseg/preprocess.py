"""Volume preprocessing ahead of 2-D model inference.

Four steps, applied per subject:

1. crop away all-zero slices (``compute_crop_box`` + ``apply_crop``);
2. min-max normalize each modality independently to [0, 1];
3. drop T2 (strongly correlated with FLAIR; it has no parameter here);
4. map FLAIR/T1/T1-GD onto RGB channels of per-axis 2-D slices.

"Zero slice" means a plane where every voxel of every considered volume is
exactly 0.0; skull-stripped backgrounds are exact zeros, so no epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import AllZero, OutOfBounds, RangeError, ShapeMismatch
from .volume import (
    AnyVolume,
    Axis,
    LabelVolume,
    Volume,
    resolve_grid_axis,
)

DEFAULT_RGB_ORDER: tuple[str, str, str] = ("FLAIR", "T1", "T1GD")


class CropMode(Enum):
    PER_SUBJECT = "per-subject"
    GLOBAL = "global"


@dataclass(frozen=True)
class CropBox:
    """Inclusive per-axis (lo, hi) voxel index ranges."""

    x: tuple[int, int]
    y: tuple[int, int]
    z: tuple[int, int]

    def __post_init__(self):
        for name, (lo, hi) in zip("xyz", (self.x, self.y, self.z)):
            if lo < 0 or hi < lo:
                raise ValueError(f"bad {name} range ({lo}, {hi}): need 0 <= lo <= hi")

    @property
    def extents(self) -> tuple[int, int, int]:
        return (
            self.x[1] - self.x[0] + 1,
            self.y[1] - self.y[0] + 1,
            self.z[1] - self.z[0] + 1,
        )

    def slices(self) -> tuple[slice, slice, slice]:
        return tuple(slice(lo, hi + 1) for lo, hi in (self.x, self.y, self.z))

    def union(self, other: "CropBox") -> "CropBox":
        return CropBox(
            *(
                (min(a[0], b[0]), max(a[1], b[1]))
                for a, b in zip((self.x, self.y, self.z), (other.x, other.y, other.z))
            )
        )


@dataclass(frozen=True)
class RgbSlice:
    """One 2-D slice with three modality channels packed as R, G, B."""

    pixels: np.ndarray  # (h, w, 3) float values in [0, 1]
    axis: Axis
    index: int

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"pixels must be (h, w, 3), got {arr.shape}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise RangeError("RGB values must lie in [0, 1]")
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "pixels", view)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _nonzero_union(vols: Sequence[AnyVolume]) -> np.ndarray:
    first = vols[0]
    shape = first.data.shape if isinstance(first, Volume) else first.labels.shape
    acc = np.zeros(shape, dtype=bool)
    for v in vols:
        arr = v.data if isinstance(v, Volume) else v.labels
        if arr.shape != shape:
            raise ShapeMismatch(f"volume dims differ: {arr.shape} vs {shape}")
        acc |= arr != 0
    return acc


def compute_crop_box(
    vols: Sequence[AnyVolume], mode: CropMode = CropMode.GLOBAL
) -> CropBox:
    """Smallest box containing every voxel nonzero in any input volume.

    Both modes compute the same union bounding box over the given volumes;
    they differ in what callers pass: PER_SUBJECT gets one subject's
    modalities, GLOBAL gets volumes spanning the whole dataset (or unions
    per-subject boxes via ``CropBox.union``).
    """
    del mode  # same computation either way; see docstring
    if not vols:
        raise ValueError("need at least one volume")
    nz = _nonzero_union(vols)
    if not nz.any():
        raise AllZero("every voxel of every volume is zero")
    ranges = []
    for axis in range(3):
        hit = np.any(nz, axis=tuple(a for a in range(3) if a != axis))
        idx = np.flatnonzero(hit)
        ranges.append((int(idx[0]), int(idx[-1])))
    return CropBox(*ranges)


def apply_crop(vol: AnyVolume, box: CropBox) -> AnyVolume:
    """Restrict a volume to the box; spacing and metadata preserved."""
    arr = vol.data if isinstance(vol, Volume) else vol.labels
    for (lo, hi), dim in zip((box.x, box.y, box.z), arr.shape):
        if hi >= dim:
            raise OutOfBounds(f"box range ({lo}, {hi}) exceeds dim {dim}")
    cropped = np.ascontiguousarray(arr[box.slices()])
    if isinstance(vol, LabelVolume):
        return LabelVolume(cropped, spacing=vol.spacing, source=vol.source)
    return Volume(cropped, spacing=vol.spacing, modality=vol.modality)


def normalize_minmax(vol: Volume) -> Volume:
    """Affinely rescale to [0, 1]; constant volumes map to all zeros.

    Output is float32 with the min mapping to exactly 0.0 and the max to
    exactly 1.0.  Idempotent once applied.
    """
    data = vol.data.astype(np.float32)
    lo = float(data.min())
    hi = float(data.max())
    if hi == lo:
        out = np.zeros_like(data)
    else:
        out = (data - np.float32(lo)) / np.float32(hi - lo)
    return Volume(out, spacing=vol.spacing, modality=vol.modality)


def map_channels_rgb(
    flair: Volume,
    t1: Volume,
    t1gd: Volume,
    axis: Axis,
    rgb_order: tuple[str, str, str] = DEFAULT_RGB_ORDER,
    axis_map: Mapping[Axis, int] | None = None,
) -> list[RgbSlice]:
    """Pack the three modalities into RGB slices along one anatomical axis.

    Default channel assignment is FLAIR->R, T1->G, T1-GD->B; ``rgb_order``
    reassigns by modality name.  Inputs must share dims and lie in [0, 1].
    """
    by_name = {"FLAIR": flair, "T1": t1, "T1GD": t1gd}
    if sorted(rgb_order) != sorted(by_name):
        raise ValueError(f"rgb_order must permute {tuple(by_name)}, got {rgb_order}")
    channels = [by_name[name] for name in rgb_order]

    shape = flair.data.shape
    for ch in channels:
        if ch.data.shape != shape:
            raise ShapeMismatch(f"channel dims differ: {ch.data.shape} vs {shape}")
        if ch.data.size and (ch.data.min() < 0.0 or ch.data.max() > 1.0):
            raise RangeError(f"{ch.modality.value} values outside [0, 1]; normalize first")

    grid_axis = resolve_grid_axis(axis, axis_map)
    stacked = np.stack([ch.data for ch in channels], axis=-1)
    return [
        RgbSlice(np.ascontiguousarray(np.take(stacked, i, axis=grid_axis)), axis, i)
        for i in range(shape[grid_axis])
    ]


def resample_mask_nearest(mask2d: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Nearest-neighbor resize of a 2-D label image.

    Source pixel for output (i, j) is floor((i + 0.5) * h / H), i.e. the
    pixel whose center is nearest under uniform scaling.  Never introduces
    labels absent from the input.
    """
    if target_h < 1 or target_w < 1:
        raise ValueError(f"target dims must be positive, got {target_h}x{target_w}")
    h, w = mask2d.shape
    rows = np.minimum((np.arange(target_h) + 0.5) * (h / target_h), h - 1).astype(np.intp)
    cols = np.minimum((np.arange(target_w) + 0.5) * (w / target_w), w - 1).astype(np.intp)
    return mask2d[np.ix_(rows, cols)]
