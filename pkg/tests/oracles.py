"""Independent brute-force reference implementations used to pin down the
production code.  Nothing here imports voxseg internals: dice counts voxels
directly, the Hausdorff oracle builds the full all-pairs distance matrix,
voting runs an explicit per-voxel histogram, and boundaries come from
scipy's morphology (a third implementation, distinct from both production
kernels).
"""

from __future__ import annotations

import collections

import numpy as np
from scipy.ndimage import binary_erosion
from scipy.spatial.distance import cdist

_FACE_STRUCT = np.zeros((3, 3, 3), dtype=bool)
_FACE_STRUCT[1, 1, 1] = True
_FACE_STRUCT[0, 1, 1] = _FACE_STRUCT[2, 1, 1] = True
_FACE_STRUCT[1, 0, 1] = _FACE_STRUCT[1, 2, 1] = True
_FACE_STRUCT[1, 1, 0] = _FACE_STRUCT[1, 1, 2] = True


def oracle_dice(x: np.ndarray, y: np.ndarray) -> float:
    """2|X∩Y| / (|X|+|Y|) by direct voxel counting; 1.0 when both empty."""
    x = np.asarray(x, dtype=bool)
    y = np.asarray(y, dtype=bool)
    nx = int(x.sum())
    ny = int(y.sum())
    if nx + ny == 0:
        return 1.0
    return 2.0 * int((x & y).sum()) / (nx + ny)


def oracle_boundary(mask: np.ndarray) -> np.ndarray:
    """Boundary voxel indices (K, 3) under 6-connectivity, via erosion:
    a voxel is interior iff all six face neighbors are inside the mask
    (the outside of the grid counts as background)."""
    mask = np.asarray(mask, dtype=bool)
    interior = binary_erosion(mask, structure=_FACE_STRUCT, border_value=0)
    return np.argwhere(mask & ~interior)


def oracle_hd95(x: np.ndarray, y: np.ndarray, spacing=(1.0, 1.0, 1.0)) -> float | None:
    """All-pairs HD95: full |∂X|x|∂Y| Euclidean distance matrix in mm,
    directed 95th percentiles (linear interpolation), max of the two."""
    sp = np.asarray(spacing, dtype=np.float64)
    bx = oracle_boundary(x) * sp
    by = oracle_boundary(y) * sp
    if len(bx) == 0 and len(by) == 0:
        return 0.0
    if len(bx) == 0 or len(by) == 0:
        return None
    d = cdist(bx, by)
    forward = np.percentile(d.min(axis=1), 95.0)
    backward = np.percentile(d.min(axis=0), 95.0)
    return float(max(forward, backward))


def oracle_vote(member_arrays, priority=(4, 1, 2, 0)) -> np.ndarray:
    """Naive per-voxel histogram + argmax with explicit tie-breaking."""
    stack = np.stack([np.asarray(m).ravel() for m in member_arrays])
    rank = {code: i for i, code in enumerate(priority)}
    out = np.empty(stack.shape[1], dtype=np.uint8)
    for v in range(stack.shape[1]):
        votes = collections.Counter(stack[:, v].tolist())
        out[v] = max(priority, key=lambda code: (votes.get(code, 0), -rank[code]))
    return out.reshape(np.asarray(member_arrays[0]).shape)


def _draw_dims(rng: np.random.Generator, shape) -> tuple:
    if isinstance(shape, int):  # upper bound per axis
        return tuple(int(d) for d in rng.integers(1, shape + 1, size=3))
    return tuple(int(d) for d in shape)


def random_mask(rng: np.random.Generator, shape=16, p: float | None = None) -> np.ndarray:
    dims = _draw_dims(rng, shape)
    p = rng.uniform(0.05, 0.6) if p is None else p
    return rng.random(dims) < p


def random_nonempty_mask(rng: np.random.Generator, shape=16) -> np.ndarray:
    while True:
        m = random_mask(rng, shape)
        if m.any():
            return m


def random_labels(rng: np.random.Generator, dims) -> np.ndarray:
    return rng.choice(np.array([0, 1, 2, 4], dtype=np.uint8), size=dims)
