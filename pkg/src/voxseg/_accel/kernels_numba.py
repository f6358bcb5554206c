"""Numba-compiled kernels.

Contracts match ``kernels_numpy`` exactly; outputs are bitwise identical.
Serial @njit is deliberate: the loops are memory-bound, so threads mostly
add scheduling variance.  Per benchmarks/bench_kernels.py the compiled
histogram scatter beats the numpy fallback, while the surface stencil is
memory-bandwidth-bound and numpy's vectorized shifts stay ahead; both are
kept so either backend runs every kernel.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def label_vote_counts(member_idx: np.ndarray, n_labels: int) -> np.ndarray:
    n, v = member_idx.shape
    counts = np.zeros((n_labels, v), dtype=np.uint16)
    for i in range(n):
        row = member_idx[i]
        for j in range(v):
            counts[row[j], j] += 1
    return counts


@njit(cache=True)
def surface_mask(mask: np.ndarray) -> np.ndarray:
    nx, ny, nz = mask.shape
    out = np.zeros_like(mask)
    for x in range(nx):
        x_edge = x == 0 or x == nx - 1
        for y in range(ny):
            xy_edge = x_edge or y == 0 or y == ny - 1
            for z in range(nz):
                if not mask[x, y, z]:
                    continue
                if xy_edge or z == 0 or z == nz - 1:
                    out[x, y, z] = True
                elif not (
                    mask[x - 1, y, z]
                    and mask[x + 1, y, z]
                    and mask[x, y - 1, z]
                    and mask[x, y + 1, z]
                    and mask[x, y, z - 1]
                    and mask[x, y, z + 1]
                ):
                    out[x, y, z] = True
    return out
