"""PNG export/import for 2-D slices and label masks.

Images are 8-bit quantized with round-half-up: q = floor(v*255 + 0.5) for
v in [0, 1].  Dequantization is q/255, so quantize(dequantize(q)) == q and
mask codes {0, 1, 2, 4} survive a write/read cycle exactly (masks are
stored as 8-bit grayscale without any scaling).
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import RangeError
from .preprocess import RgbSlice


def quantize8(values: np.ndarray) -> np.ndarray:
    """Map floats in [0, 1] to uint8 with round-half-up."""
    arr = np.asarray(values)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise RangeError("values must lie in [0, 1] before quantization")
    return np.floor(arr * 255.0 + 0.5).astype(np.uint8)


def dequantize8(codes: np.ndarray) -> np.ndarray:
    """Inverse of quantize8 up to quantization error: q / 255 as float32."""
    return np.asarray(codes, dtype=np.float32) / np.float32(255.0)


def save_rgb_png(sl: RgbSlice, path: str | os.PathLike) -> None:
    Image.fromarray(quantize8(sl.pixels), mode="RGB").save(path, format="PNG")


def load_rgb_png(path: str | os.PathLike) -> np.ndarray:
    """Read an RGB PNG back as an (h, w, 3) uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_mask_png(mask2d: np.ndarray, path: str | os.PathLike) -> None:
    """Write a 2-D uint8 label image as grayscale, codes unscaled."""
    arr = np.asarray(mask2d)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path, format="PNG")


def load_mask_png(path: str | os.PathLike) -> np.ndarray:
    """Read a grayscale label PNG back as a 2-D uint8 array."""
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        return np.asarray(im, dtype=np.uint8)
