"""Exact segmentation metrics: Dice coefficient and 95% Hausdorff distance.

Both are computed per tumor region (TC, WT, ET) on binary masks sharing
dims and spacing.  HD95 is a surface distance: boundary voxel centers, in
mm via the spacing, under 6-connectivity; the 95th percentile uses linear
interpolation between order statistics, and the result is the max of the
two directed percentiles.

Empty-mask policy (reported via flags, never silently folded in):
    both masks empty  -> dice 1.0, hd95 0.0
    exactly one empty -> dice 0.0, hd95 None (undefined, excluded
                         from aggregation)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _accel
from .errors import ShapeMismatch
from .volume import BinaryMask, LabelVolume, Region, compose_region

FLAG_OK = ""
FLAG_BOTH_EMPTY = "both_empty"
FLAG_GT_EMPTY = "gt_empty"
FLAG_PRED_EMPTY = "pred_empty"


@dataclass(frozen=True)
class RegionMetrics:
    """Dice and HD95 for one region; hd95 is None when undefined."""

    region: Region
    dice: float
    hd95: float | None
    flag: str = FLAG_OK


def _check_pair(x: BinaryMask, y: BinaryMask) -> None:
    if x.data.shape != y.data.shape:
        raise ShapeMismatch(f"mask dims differ: {x.data.shape} vs {y.data.shape}")
    if x.spacing != y.spacing:
        raise ShapeMismatch(f"mask spacings differ: {x.spacing} vs {y.spacing}")


def dice_coefficient(x: BinaryMask, y: BinaryMask) -> float:
    """2|X∩Y| / (|X|+|Y|); 1.0 when both masks are empty."""
    _check_pair(x, y)
    nx = int(np.count_nonzero(x.data))
    ny = int(np.count_nonzero(y.data))
    if nx == 0 and ny == 0:
        return 1.0
    inter = int(np.count_nonzero(x.data & y.data))
    return 2.0 * inter / (nx + ny)


def boundary_voxels(mask: BinaryMask) -> np.ndarray:
    """Boundary voxel centers in mm, shape (K, 3).

    A mask voxel is on the boundary when any of its six face neighbors is
    outside the mask or outside the grid.  Empty mask gives an empty array.
    """
    surf = _accel.surface_mask(np.ascontiguousarray(mask.data))
    idx = np.argwhere(surf)
    return idx.astype(np.float64) * np.asarray(mask.spacing, dtype=np.float64)


def _directed_p95(src: np.ndarray, tree: cKDTree) -> float:
    dists, _ = tree.query(src, k=1)
    return float(np.percentile(dists, 95.0))


def hausdorff95(x: BinaryMask, y: BinaryMask) -> float | None:
    """Max of the two directed 95th-percentile surface distances, in mm.

    Returns 0.0 when both masks are empty and None when exactly one is
    (the distance set is empty in one direction, so the value is undefined).
    """
    _check_pair(x, y)
    bx = boundary_voxels(x)
    by = boundary_voxels(y)
    if bx.size == 0 and by.size == 0:
        return 0.0
    if bx.size == 0 or by.size == 0:
        return None
    tx = cKDTree(bx)
    ty = cKDTree(by)
    return max(_directed_p95(bx, ty), _directed_p95(by, tx))


def evaluate_subject(gt: LabelVolume, pred: LabelVolume) -> list[RegionMetrics]:
    """Compose each region from both volumes and compute both metrics.

    Regions are evaluated in the fixed order TC, WT, ET.
    """
    if gt.labels.shape != pred.labels.shape:
        raise ShapeMismatch(
            f"volume dims differ: {gt.labels.shape} vs {pred.labels.shape}"
        )
    if gt.spacing != pred.spacing:
        raise ShapeMismatch(f"spacings differ: {gt.spacing} vs {pred.spacing}")
    out = []
    for region in (Region.TC, Region.WT, Region.ET):
        gm = compose_region(gt, region)
        pm = compose_region(pred, region)
        g_empty = gm.voxel_count == 0
        p_empty = pm.voxel_count == 0
        if g_empty and p_empty:
            flag = FLAG_BOTH_EMPTY
        elif g_empty:
            flag = FLAG_GT_EMPTY
        elif p_empty:
            flag = FLAG_PRED_EMPTY
        else:
            flag = FLAG_OK
        out.append(
            RegionMetrics(
                region=region,
                dice=dice_coefficient(gm, pm),
                hd95=hausdorff95(gm, pm),
                flag=flag,
            )
        )
    return out
