"""Pure-numpy reference kernels.

Same contracts as ``kernels_numba``; used when numba is unavailable or when
``VOXSEG_BACKEND=numpy``.
"""

from __future__ import annotations

import numpy as np


def label_vote_counts(member_idx: np.ndarray, n_labels: int) -> np.ndarray:
    """Count per-voxel votes for each label index.

    Args:
        member_idx: (N, V) uint8 array of label indices in [0, n_labels),
            one row per ensemble member, flattened voxels along axis 1.
        n_labels: number of distinct label indices.

    Returns:
        (n_labels, V) uint16 count array; column sums equal N.
    """
    n, v = member_idx.shape
    counts = np.zeros((n_labels, v), dtype=np.uint16)
    for code in range(n_labels):
        np.sum(member_idx == code, axis=0, dtype=np.uint16, out=counts[code])
    return counts


def surface_mask(mask: np.ndarray) -> np.ndarray:
    """Boundary voxels of a 3-D boolean mask under 6-connectivity.

    A foreground voxel is on the surface when at least one of its six face
    neighbors is background; voxels on the array border always are, since
    the outside counts as background.
    """
    padded = np.pad(mask, 1, mode="constant", constant_values=False)
    interior = np.ones_like(mask)
    for axis in range(3):
        lo = [slice(1, -1)] * 3
        hi = [slice(1, -1)] * 3
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        interior &= padded[tuple(lo)] & padded[tuple(hi)]
    return mask & ~interior
