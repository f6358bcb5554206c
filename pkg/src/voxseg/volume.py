"""Core voxel-grid data model: volumes, label volumes, orthogonal slicing,
lossless reassembly, and tumor-region composition.

Conventions
-----------
* Grids are indexed ``[x, y, z]``; the canonical flat ordering (used by all
  on-disk formats) is x-fastest.
* ``spacing`` is millimetres per voxel along each grid axis.
* Anatomical planes map to grid axes as: sagittal slices stack along x,
  coronal along y, axial along z.  Datasets with a different orientation
  convention can pass an explicit axis map.
* All container types are immutable after construction and safe to share
  across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Mapping, Union

import numpy as np

from .errors import BadLabel, IncompletePack, ShapeMismatch


class Modality(Enum):
    T1 = "T1"
    T1GD = "T1GD"
    T2 = "T2"
    FLAIR = "FLAIR"
    OTHER = "Other"


class Label(IntEnum):
    """Voxel class codes, following the BraTS ground-truth convention."""

    ELSE = 0
    NCR = 1
    ED = 2
    ET = 4


VALID_LABELS: tuple[int, ...] = (0, 1, 2, 4)


class Region(Enum):
    """Composed evaluation regions built from raw label classes."""

    TC = (Label.NCR, Label.ET)
    WT = (Label.NCR, Label.ED, Label.ET)
    ET = (Label.ET,)

    @property
    def labels(self) -> tuple[Label, ...]:
        return self.value


class Axis(Enum):
    AXIAL = "axial"
    SAGITTAL = "sagittal"
    CORONAL = "coronal"


# Default anatomical-plane -> grid-axis mapping (see module docstring).
DEFAULT_AXIS_MAP: Mapping[Axis, int] = {
    Axis.SAGITTAL: 0,
    Axis.CORONAL: 1,
    Axis.AXIAL: 2,
}


def resolve_grid_axis(axis: Axis, axis_map: Mapping[Axis, int] | None = None) -> int:
    """Grid-axis index a plane slices along, honoring an optional override."""
    mapping = DEFAULT_AXIS_MAP if axis_map is None else axis_map
    if sorted(mapping.values()) != [0, 1, 2] or set(mapping) != set(Axis):
        raise ValueError(f"axis map must be a bijection onto grid axes 0..2, got {mapping!r}")
    return mapping[axis]


def _readonly(arr: np.ndarray) -> np.ndarray:
    view = arr.view()
    view.flags.writeable = False
    return view


def _check_spacing(spacing) -> tuple[float, float, float]:
    vals = tuple(float(s) for s in spacing)
    if len(vals) != 3 or any(s <= 0 or not np.isfinite(s) for s in vals):
        raise ValueError(f"spacing must be three positive finite values, got {spacing!r}")
    return vals


@dataclass(frozen=True, eq=False)
class Volume:
    """A 3D scalar grid: one MRI modality or one probability field."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    modality: Modality = Modality.OTHER

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"volume data must be 3-D with positive dims, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.number):
            raise ValueError(f"volume data must be numeric, got dtype {arr.dtype}")
        if np.issubdtype(arr.dtype, np.floating) and not np.isfinite(arr).all():
            raise ValueError("volume data contains non-finite values")
        object.__setattr__(self, "data", _readonly(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.spacing == other.spacing
            and self.modality is other.modality
            and self.data.dtype == other.data.dtype
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """A 3D grid of class labels with provenance metadata.

    ``source`` is free text identifying where the labels came from, e.g. a
    model id, ``"ground-truth"`` or ``"ensemble"``.
    """

    labels: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    source: str = ""

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"label data must be 3-D with positive dims, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise BadLabel(f"labels must be integers, got dtype {arr.dtype}")
        bad = np.setdiff1d(np.unique(arr), np.asarray(VALID_LABELS))
        if bad.size:
            raise BadLabel(f"label values outside {VALID_LABELS}: {bad.tolist()}")
        if arr.dtype != np.uint8:
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "labels", _readonly(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.labels.shape  # type: ignore[return-value]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelVolume):
            return NotImplemented
        return (
            self.spacing == other.spacing
            and self.source == other.source
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """A boolean voxel mask (stored as bool, serializes as 0/1)."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"mask data must be 3-D with positive dims, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.isin(arr, (0, 1)).all():
                raise ValueError("mask values must be 0 or 1")
            arr = arr.astype(np.bool_)
        object.__setattr__(self, "data", _readonly(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def voxel_count(self) -> int:
        return int(np.count_nonzero(self.data))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.data, other.data)


AnyVolume = Union[Volume, LabelVolume]

_KIND_IMAGE = "image"
_KIND_LABELS = "labels"


def _unwrap(vol: AnyVolume) -> tuple[np.ndarray, str, str]:
    """(array, kind, tag) for either volume flavor; tag restores metadata."""
    if isinstance(vol, LabelVolume):
        return vol.labels, _KIND_LABELS, vol.source
    if isinstance(vol, Volume):
        return vol.data, _KIND_IMAGE, vol.modality.value
    raise TypeError(f"expected Volume or LabelVolume, got {type(vol).__name__}")


@dataclass(frozen=True, eq=False)
class SlicePack:
    """An ordered set of 2D slices cut along one plane, with the position
    metadata needed to rebuild the source volume losslessly.

    ``indices`` are 0-based positions along the (possibly remapped) grid
    axis.  A pack produced by :func:`extract_slices` is always complete;
    ``partial`` marks hand-built packs that intentionally omit slices.
    """

    axis: Axis
    grid_axis: int
    origin_dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    slices: tuple[np.ndarray, ...]
    indices: tuple[int, ...]
    kind: str = _KIND_IMAGE
    tag: str = ""
    partial: bool = False

    def __post_init__(self):
        if self.grid_axis not in (0, 1, 2):
            raise ValueError(f"grid_axis must be 0..2, got {self.grid_axis}")
        if self.kind not in (_KIND_IMAGE, _KIND_LABELS):
            raise ValueError(f"kind must be 'image' or 'labels', got {self.kind!r}")
        dims = tuple(int(d) for d in self.origin_dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"origin_dims must be three positive counts, got {self.origin_dims!r}")
        idx = tuple(int(i) for i in self.indices)
        if len(idx) != len(self.slices):
            raise ValueError("one index per slice required")
        extent = dims[self.grid_axis]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("slice indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= extent):
            raise ValueError(f"slice indices must lie in [0, {extent})")
        object.__setattr__(self, "origin_dims", dims)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "slices", tuple(np.asarray(s) for s in self.slices))

    @property
    def slice_shape(self) -> tuple[int, int]:
        shape = list(self.origin_dims)
        del shape[self.grid_axis]
        return tuple(shape)  # type: ignore[return-value]

    @property
    def complete(self) -> bool:
        return self.indices == tuple(range(self.origin_dims[self.grid_axis]))


def extract_slices(
    vol: AnyVolume,
    axis: Axis,
    axis_map: Mapping[Axis, int] | None = None,
) -> SlicePack:
    """Cut a volume into one 2D slice per index along ``axis``.

    Every voxel lands in exactly one slice; the pack carries enough
    metadata for :func:`reassemble` to rebuild the input bit-exactly.
    """
    arr, kind, tag = _unwrap(vol)
    ga = resolve_grid_axis(axis, axis_map)
    extent = arr.shape[ga]
    slices = tuple(np.take(arr, i, axis=ga) for i in range(extent))
    return SlicePack(
        axis=axis,
        grid_axis=ga,
        origin_dims=arr.shape,
        spacing=vol.spacing,
        slices=slices,
        indices=tuple(range(extent)),
        kind=kind,
        tag=tag,
    )


def reassemble(pack: SlicePack) -> AnyVolume:
    """Rebuild the source volume from a complete slice pack.

    Raises IncompletePack when indices are missing and ShapeMismatch when
    any slice disagrees with ``origin_dims``.
    """
    extent = pack.origin_dims[pack.grid_axis]
    if not pack.complete:
        missing = sorted(set(range(extent)) - set(pack.indices))
        raise IncompletePack(
            f"pack covers {len(pack.indices)}/{extent} slices; missing indices {missing[:8]}"
            + ("..." if len(missing) > 8 else "")
        )
    expected = pack.slice_shape
    for i, sl in zip(pack.indices, pack.slices):
        if sl.ndim != 2 or sl.shape != expected:
            raise ShapeMismatch(f"slice {i} has shape {sl.shape}, expected {expected}")
    out = np.empty(pack.origin_dims, dtype=pack.slices[0].dtype)
    mover = np.moveaxis(out, pack.grid_axis, 0)
    for i, sl in zip(pack.indices, pack.slices):
        mover[i] = sl
    if pack.kind == _KIND_LABELS:
        return LabelVolume(out, pack.spacing, source=pack.tag)
    try:
        modality = Modality(pack.tag)
    except ValueError:
        modality = Modality.OTHER
    return Volume(out, pack.spacing, modality=modality)


def compose_region(lv: LabelVolume, region: Region) -> BinaryMask:
    """Binary mask of one evaluation region (TC, WT, or ET)."""
    codes = [int(l) for l in region.labels]
    return BinaryMask(np.isin(lv.labels, codes), lv.spacing)
