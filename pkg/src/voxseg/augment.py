"""Seeded 2-D augmentation policies for RGB training slices.

Two builtin policies:

* Weak   - HSV jitter p=1.0, horizontal flip p=0.5, random crop p=0.8
* Strong - gamma jitter p=0.5, horizontal flip p=0.3, random crop p=0.2

Both crop to at least 0.8 of the image area.  Jitter amplitudes are module
defaults (hue +-0.02, saturation/value scale in [0.9, 1.1], gamma in
[0.7, 1.5]) and configurable per policy.  Everything is driven by
``numpy.random.default_rng(seed)``: the same (policy, seed, image) triple
always yields the same output.  Transform order is photometric, then flip,
then crop; crops are resized back to the original dims (bilinear for the
image, nearest for the mask) so batch shapes stay constant.

HSV here is the standard hexcone model: V = max(R,G,B), S = (V-min)/V with
S=0 at V=0, and hue in [0,1) piecewise by the dominant channel.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .errors import ShapeMismatch, UnknownPolicy
from .preprocess import RgbSlice, resample_mask_nearest

WEAK = "Weak"
STRONG = "Strong"


@dataclass(frozen=True)
class AugmentPolicy:
    name: str
    hsv_jitter_prob: float = 0.0
    gamma_jitter_prob: float = 0.0
    hflip_prob: float = 0.0
    crop_prob: float = 0.0
    crop_min_area_fraction: float = 0.8
    hue_delta: float = 0.02
    sat_range: tuple[float, float] = (0.9, 1.1)
    val_range: tuple[float, float] = (0.9, 1.1)
    gamma_range: tuple[float, float] = (0.7, 1.5)

    def __post_init__(self):
        probs = {
            "hsv_jitter_prob": self.hsv_jitter_prob,
            "gamma_jitter_prob": self.gamma_jitter_prob,
            "hflip_prob": self.hflip_prob,
            "crop_prob": self.crop_prob,
        }
        for field_name, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{field_name}={p} outside [0, 1]")
        if not 0.0 < self.crop_min_area_fraction <= 1.0:
            raise ValueError(
                f"crop_min_area_fraction={self.crop_min_area_fraction} outside (0, 1]"
            )
        for rng_name in ("sat_range", "val_range", "gamma_range"):
            lo, hi = getattr(self, rng_name)
            if not (0 < lo <= hi):
                raise ValueError(f"{rng_name}=({lo}, {hi}) must satisfy 0 < lo <= hi")
            object.__setattr__(self, rng_name, (float(lo), float(hi)))

    def to_json(self) -> dict[str, Any]:
        d = asdict(self)
        for k in ("sat_range", "val_range", "gamma_range"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "AugmentPolicy":
        kwargs = dict(d)
        for k in ("sat_range", "val_range", "gamma_range"):
            if k in kwargs:
                kwargs[k] = tuple(kwargs[k])
        return cls(**kwargs)


_BUILTIN = {
    "weak": AugmentPolicy(
        name=WEAK, hsv_jitter_prob=1.0, hflip_prob=0.5, crop_prob=0.8
    ),
    "strong": AugmentPolicy(
        name=STRONG, gamma_jitter_prob=0.5, hflip_prob=0.3, crop_prob=0.2
    ),
}


def builtin_policy(name: str) -> AugmentPolicy:
    """Look up a builtin policy by name (case-insensitive)."""
    try:
        return _BUILTIN[name.lower()]
    except KeyError:
        raise UnknownPolicy(f"no builtin policy {name!r}; choose from Weak, Strong") from None


@dataclass(frozen=True)
class AugmentPlan:
    """Concrete transform decisions for one slice, prior to application.

    Splitting planning from application keeps the random draws testable:
    rates and parameter ranges can be checked without touching pixels.
    """

    hsv: tuple[float, float, float] | None  # (hue shift, sat scale, val scale)
    gamma: float | None
    hflip: bool
    crop: tuple[int, int, int, int] | None  # (top, left, height, width)


def plan_augmentation(
    policy: AugmentPolicy, seed: int, height: int, width: int
) -> AugmentPlan:
    """Draw one deterministic transform plan for an image of the given size.

    Draw order is fixed (HSV, gamma, flip, crop) so a seed means the same
    thing for every policy.  The crop size is ceil(dim * sqrt(s)) with
    s uniform in [min_area, 1], which guarantees the retained area is at
    least ``crop_min_area_fraction`` of the original.
    """
    rng = np.random.default_rng(seed)

    hsv = None
    if rng.random() < policy.hsv_jitter_prob:
        hsv = (
            float(rng.uniform(-policy.hue_delta, policy.hue_delta)),
            float(rng.uniform(*policy.sat_range)),
            float(rng.uniform(*policy.val_range)),
        )

    gamma = None
    if rng.random() < policy.gamma_jitter_prob:
        gamma = float(rng.uniform(*policy.gamma_range))

    hflip = bool(rng.random() < policy.hflip_prob)

    crop = None
    if rng.random() < policy.crop_prob:
        s = float(rng.uniform(policy.crop_min_area_fraction, 1.0))
        ch = min(height, math.ceil(height * math.sqrt(s)))
        cw = min(width, math.ceil(width * math.sqrt(s)))
        top = int(rng.integers(0, height - ch + 1))
        left = int(rng.integers(0, width - cw + 1))
        crop = (top, left, ch, cw)

    return AugmentPlan(hsv=hsv, gamma=gamma, hflip=hflip, crop=crop)


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Hexcone RGB -> HSV, all channels in [0, 1]; vectorized over (..., 3)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    delta = v - rgb.min(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(v > 0, delta / np.where(v > 0, v, 1.0), 0.0)
        dd = np.where(delta > 0, delta, 1.0)
        h = np.select(
            [delta == 0, v == r, v == g],
            [0.0, (g - b) / dd / 6.0, ((b - r) / dd + 2.0) / 6.0],
            default=((r - g) / dd + 4.0) / 6.0,
        )
    return np.stack([np.mod(h, 1.0), s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse hexcone transform; vectorized over (..., 3)."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h6 = np.mod(h, 1.0) * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def _resize_bilinear(img: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Center-aligned separable bilinear resize of (h, w[, c]) float data."""
    h, w = img.shape[:2]

    def axis_coords(target: int, source: int):
        x = np.clip((np.arange(target) + 0.5) * (source / target) - 0.5, 0.0, source - 1.0)
        lo = np.floor(x).astype(np.intp)
        hi = np.minimum(lo + 1, source - 1)
        return lo, hi, x - lo

    r0, r1, rf = axis_coords(target_h, h)
    c0, c1, cf = axis_coords(target_w, w)
    cf = cf[None, :, None] if img.ndim == 3 else cf[None, :]
    top = img[np.ix_(r0, c0)] * (1.0 - cf) + img[np.ix_(r0, c1)] * cf
    bot = img[np.ix_(r1, c0)] * (1.0 - cf) + img[np.ix_(r1, c1)] * cf
    rf = rf[:, None, None] if img.ndim == 3 else rf[:, None]
    return top * (1.0 - rf) + bot * rf


def apply_plan(
    img: RgbSlice, mask2d: np.ndarray, plan: AugmentPlan
) -> tuple[RgbSlice, np.ndarray]:
    """Apply a transform plan: photometric to the image only, geometric to both."""
    pixels = np.asarray(img.pixels, dtype=np.float64)
    mask = np.asarray(mask2d)
    if pixels.shape[:2] != mask.shape:
        raise ShapeMismatch(f"image is {pixels.shape[:2]}, mask is {mask.shape}")
    h, w = mask.shape

    if plan.hsv is not None:
        dh, sscale, vscale = plan.hsv
        hsv = rgb_to_hsv(pixels)
        hsv[..., 0] = np.mod(hsv[..., 0] + dh, 1.0)
        hsv[..., 1] = np.clip(hsv[..., 1] * sscale, 0.0, 1.0)
        hsv[..., 2] = np.clip(hsv[..., 2] * vscale, 0.0, 1.0)
        pixels = hsv_to_rgb(hsv)
    if plan.gamma is not None:
        pixels = np.power(pixels, plan.gamma)

    if plan.hflip:
        pixels = pixels[:, ::-1]
        mask = mask[:, ::-1]

    if plan.crop is not None:
        top, left, ch, cw = plan.crop
        pixels = _resize_bilinear(pixels[top : top + ch, left : left + cw], h, w)
        mask = resample_mask_nearest(mask[top : top + ch, left : left + cw], h, w)

    pixels = np.clip(pixels, 0.0, 1.0).astype(np.float32)
    out_img = RgbSlice(pixels, axis=img.axis, index=img.index)
    return out_img, np.ascontiguousarray(mask)


def apply_augmentation(
    img: RgbSlice, mask2d: np.ndarray, policy: AugmentPolicy, seed: int
) -> tuple[RgbSlice, np.ndarray]:
    """Plan and apply one augmentation draw.  Deterministic given the seed."""
    plan = plan_augmentation(policy, seed, img.height, img.width)
    return apply_plan(img, mask2d, plan)
