"""Image decoding, grayscale conversion and downscaling.

Every luminance value produced here is computed with exact integer
arithmetic (or, for the Z-transform reduction, a fixed float formula) and
rounded half-up, so the same input bytes give the same pixels everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "GrayImage",
    "RgbImage",
    "ZReduceParams",
    "load_rgb",
    "to_grayscale",
    "resize_box",
    "resize_bilinear",
    "z_halve",
    "z_reduce",
    "DEFAULT_OMEGA",
]

DEFAULT_OMEGA = math.pi / 4


class ImagingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit luminance image stored as an immutable (height, width) uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise ImagingError(f"gray image must be a non-empty 2D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.floor(arr)):
                raise ImagingError("gray image values must be integers")
            if arr.min() < 0 or arr.max() > 255:
                raise ImagingError("gray image values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def constant(cls, value: int, width: int, height: int) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.uint8))

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit RGB image stored as an immutable (height, width, 3) uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ImagingError(f"RGB image must have shape (h, w, 3), got {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise ImagingError("RGB values must lie in [0, 255]")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"RgbImage({self.width}x{self.height})"


@dataclass(frozen=True)
class ZReduceParams:
    omega: float = DEFAULT_OMEGA
    levels: int = 3

    def __post_init__(self):
        if not 0 < self.omega < math.pi:
            raise ImagingError(f"omega must lie in (0, pi), got {self.omega}")
        if self.levels < 1:
            raise ImagingError(f"levels must be >= 1, got {self.levels}")


def load_rgb(path: str | Path) -> RgbImage:
    """Decode a PNG or JPEG file. Grayscale files are expanded to RGB."""
    with Image.open(path) as im:
        if im.format not in ("PNG", "JPEG"):
            raise ImagingError(f"{path}: unsupported image format {im.format!r}")
        rgb = im.convert("RGB")
        return RgbImage(np.asarray(rgb, dtype=np.uint8))


def _round_half_up(num: np.ndarray, den: int) -> np.ndarray:
    # floor(num/den + 1/2) for non-negative integer numerators
    return (2 * num + den) // (2 * den)


def to_grayscale(img: RgbImage) -> GrayImage:
    """BT.601 luma, rounded half-up: round(0.299 R + 0.587 G + 0.114 B)."""
    rgb = img.data.astype(np.int64)
    num = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return GrayImage(np.clip((num + 500) // 1000, 0, 255))


def _check_target(w: int, h: int) -> None:
    if w < 1 or h < 1:
        raise ImagingError(f"target size must be at least 1x1, got {w}x{h}")


def _box_weights(src: int, dst: int) -> np.ndarray:
    """Integer overlap matrix (dst, src), in units of 1/dst source pixels.

    Output cell j covers [j*src/dst, (j+1)*src/dst); scaled by dst the edges
    become the integers j*src and (j+1)*src. Each row sums to src.
    """
    j = np.arange(dst)[:, None]
    x = np.arange(src)[None, :]
    lo = np.maximum(x * dst, j * src)
    hi = np.minimum((x + 1) * dst, (j + 1) * src)
    return np.maximum(hi - lo, 0)


def resize_box(img: GrayImage, w: int, h: int) -> GrayImage:
    """Area-weighted mean downscale (also valid for upscaling)."""
    _check_target(w, h)
    W, H = img.width, img.height
    if (w, h) == (W, H):
        return img
    wx = _box_weights(W, w).astype(np.float64)
    wy = _box_weights(H, h).astype(np.float64)
    # all partial sums are integers below 2**53, so the float product is exact
    num = (wy @ img.data.astype(np.float64) @ wx.T).astype(np.int64)
    return GrayImage(_round_half_up(num, W * H))


def _bilinear_taps(src: int, dst: int):
    """Left tap, right tap and right weight (out of 2*dst) per output index.

    Pixel-center alignment: source coordinate (j + 1/2) * src/dst - 1/2,
    which is ((2j + 1) * src - dst) / (2 * dst), clamped to [0, src - 1].
    """
    den = 2 * dst
    num = (2 * np.arange(dst) + 1) * src - dst
    num = np.clip(num, 0, (src - 1) * den)
    i0 = num // den
    frac = num - i0 * den
    i1 = np.minimum(i0 + 1, src - 1)
    return i0, i1, frac.astype(np.int64), den


def resize_bilinear(img: GrayImage, w: int, h: int) -> GrayImage:
    """Bilinear interpolation with pixel-center alignment, exact rational weights."""
    _check_target(w, h)
    W, H = img.width, img.height
    if (w, h) == (W, H):
        return img
    src = img.data.astype(np.int64)
    x0, x1, fx, dx = _bilinear_taps(W, w)
    y0, y1, fy, dy = _bilinear_taps(H, h)
    rows = src[:, x0] * (dx - fx) + src[:, x1] * fx
    num = rows[y0, :] * (dy - fy)[:, None] + rows[y1, :] * fy[:, None]
    return GrayImage(_round_half_up(num, dx * dy))


def z_halve(img: GrayImage, omega: float = DEFAULT_OMEGA) -> GrayImage:
    """Replace every 2x2 block by the normalized magnitude of its 2D Z-transform.

    With z1 = z2 = e^{i omega}, the block transform is
    X = x00 + (x01 + x10) e^{-i omega} + x11 e^{-2i omega}, and the output
    pixel is round(|X| / |1 + e^{-i omega}|^2), clamped to [0, 255].
    """
    H, W = img.data.shape
    if W % 2 or H % 2:
        raise ImagingError(f"z_halve needs even dimensions, got {W}x{H}")
    x = img.data.astype(np.float64)
    x00 = x[0::2, 0::2]
    x01 = x[0::2, 1::2]
    x10 = x[1::2, 0::2]
    x11 = x[1::2, 1::2]
    mid = x01 + x10
    c1, s1 = math.cos(omega), math.sin(omega)
    c2, s2 = math.cos(2 * omega), math.sin(2 * omega)
    re = x00 + mid * c1 + x11 * c2
    im = mid * s1 + x11 * s2
    mag = np.sqrt(re * re + im * im)
    norm = 2.0 + 2.0 * c1
    if norm <= 0:
        raise ImagingError("omega = pi has a zero normalization constant")
    out = np.floor(mag / norm + 0.5)
    return GrayImage(np.clip(out, 0, 255).astype(np.uint8))


def z_reduce(img: GrayImage, target_w: int, target_h: int,
             params: ZReduceParams = ZReduceParams()) -> GrayImage:
    """Bilinear to target * 2**levels, then halve ``levels`` times with z_halve."""
    _check_target(target_w, target_h)
    scale = 2 ** params.levels
    out = resize_bilinear(img, target_w * scale, target_h * scale)
    for _ in range(params.levels):
        out = z_halve(out, params.omega)
    return out
