"""The five 64-bit perceptual hashes and the ten-value feature vector.

Each hash reduces a grayscale image, thresholds an 8x8 plane and packs the
bits row-major with pixel (0, 0) in the most significant bit.  The reduction
is either an area-weighted box resize or the Z-transform reduction from
:mod:`crackhash.imaging`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .imaging import (
    GrayImage,
    RgbImage,
    ZReduceParams,
    DEFAULT_OMEGA,
    resize_box,
    to_grayscale,
    z_reduce,
)

__all__ = [
    "Algo",
    "Reducer",
    "Hash64",
    "FEATURE_NAMES",
    "FEATURE_ORDER",
    "feature_name",
    "binarize_gt",
    "pack_bits",
    "unpack_bits",
    "median",
    "dct2d",
    "dwt2d_ll",
    "dwt_analysis_matrix",
    "wavelet_filter",
    "Wavelet",
    "ahash",
    "dhash",
    "phash",
    "whash",
    "compute_hash",
    "hash_to_float",
    "hamming",
    "hash_all",
    "extract_features",
]

# Transform coefficients are rounded to this many decimals before thresholding,
# so that values equal in exact arithmetic compare equal despite float noise.
COEFF_DECIMALS = 9

PHASH_FACTOR = 4
WHASH_INPUT = 64
WHASH_LEVELS = 3


class HashError(ValueError):
    pass


class Algo(str, enum.Enum):
    AHASH = "ahash"
    DHASH = "dhash"
    PHASH = "phash"
    WHASH_HAAR = "whash-haar"
    WHASH_DB4 = "whash-db4"


class Reducer(str, enum.Enum):
    BOX = "box"
    ZTRANSFORM = "z"


@dataclass(frozen=True)
class Hash64:
    bits: int
    algo: Algo
    z_variant: bool = False

    def __post_init__(self):
        if not 0 <= self.bits < 1 << 64:
            raise HashError(f"hash bits out of 64-bit range: {self.bits}")

    @property
    def hex(self) -> str:
        return f"{self.bits:016x}"

    @property
    def name(self) -> str:
        return feature_name(self.algo, self.z_variant)

    def __str__(self):
        return self.hex


def feature_name(algo: Algo, z_variant: bool) -> str:
    base = Algo(algo).value.replace("-", "_")
    return f"z_{base}" if z_variant else base


FEATURE_ORDER = [(algo, z) for z in (False, True) for algo in Algo]
FEATURE_NAMES = [feature_name(a, z) for a, z in FEATURE_ORDER]


# --- bit plumbing -----------------------------------------------------------

def binarize_gt(values: np.ndarray, threshold: float) -> np.ndarray:
    """Boolean matrix, True where the value is strictly above ``threshold``."""
    values = np.asarray(values)
    if values.size == 0:
        raise HashError("cannot binarize an empty matrix")
    return values > threshold


_BIT_WEIGHTS = [1 << (63 - i) for i in range(64)]


def pack_bits(bits: np.ndarray) -> int:
    bits = np.asarray(bits)
    if bits.shape != (8, 8):
        raise HashError(f"expected an 8x8 bit matrix, got shape {bits.shape}")
    return sum(w for w, b in zip(_BIT_WEIGHTS, bits.ravel().tolist()) if b)


def unpack_bits(value: int) -> np.ndarray:
    return np.array([(value >> (63 - i)) & 1 for i in range(64)], dtype=bool).reshape(8, 8)


def median(values: np.ndarray) -> float:
    """Median; for an even count, the mean of the two middle order statistics."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = v.size
    if n == 0:
        raise HashError("median of an empty set")
    if n % 2:
        return float(v[n // 2])
    return float((v[n // 2 - 1] + v[n // 2]) / 2)


# --- transforms -------------------------------------------------------------

def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    c[0, :] = math.sqrt(1.0 / n)
    return c


_DCT_CACHE: dict[int, np.ndarray] = {}


def dct2d(m: np.ndarray) -> np.ndarray:
    """Orthonormal 2D DCT-II, applied along rows and then along columns."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise HashError(f"dct2d needs a square matrix of side >= 2, got {m.shape}")
    n = m.shape[0]
    c = _DCT_CACHE.get(n)
    if c is None:
        c = _DCT_CACHE.setdefault(n, _dct_matrix(n))
    rows = m @ c.T
    return c @ rows


# Daubechies low-pass analysis filters, orthonormal (sum sqrt(2), unit energy).
_HAAR = np.array([1.0, 1.0]) / math.sqrt(2.0)
_DB4 = np.array([
    0.23037781330885523,
    0.7148465705525415,
    0.6308807679295904,
    -0.02798376941698385,
    -0.18703481171888114,
    0.030841381835986965,
    0.032883011666982945,
    -0.010597401784997278,
])


class Wavelet(str, enum.Enum):
    HAAR = "haar"
    DB4 = "db4"


def wavelet_filter(wavelet: Wavelet | str):
    """(low-pass, high-pass) analysis filters; high[j] = (-1)^j low[L-1-j]."""
    lo = _HAAR if Wavelet(wavelet) is Wavelet.HAAR else _DB4
    hi = lo[::-1] * np.array([(-1) ** j for j in range(lo.size)])
    return lo, hi


def dwt_analysis_matrix(n: int, wavelet: Wavelet | str) -> np.ndarray:
    """One periodized analysis level as an orthogonal (n, n) matrix.

    Rows [0, n/2) produce the approximation, rows [n/2, n) the detail:
    a[k] = sum_j lo[j] x[(2k + j) mod n].
    """
    if n < 2 or n % 2:
        raise HashError(f"DWT level needs an even length, got {n}")
    lo, hi = wavelet_filter(wavelet)
    a = np.zeros((n, n))
    half = n // 2
    for k in range(half):
        for j in range(lo.size):
            col = (2 * k + j) % n
            a[k, col] += lo[j]
            a[half + k, col] += hi[j]
    return a


_DWT_CACHE: dict[tuple[int, str], np.ndarray] = {}


def _lowpass_matrix(n: int, wavelet: Wavelet) -> np.ndarray:
    key = (n, wavelet.value)
    if key not in _DWT_CACHE:
        _DWT_CACHE[key] = dwt_analysis_matrix(n, wavelet)[: n // 2]
    return _DWT_CACHE[key]


def dwt2d_ll(m: np.ndarray, wavelet: Wavelet | str, levels: int) -> np.ndarray:
    """LL band after ``levels`` rounds of separable periodized analysis."""
    wavelet = Wavelet(wavelet)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise HashError(f"dwt2d_ll needs a square matrix, got {m.shape}")
    if levels < 1 or m.shape[0] % (2 ** levels):
        raise HashError(f"side {m.shape[0]} is not divisible by 2**{levels}")
    for _ in range(levels):
        lp = _lowpass_matrix(m.shape[0], wavelet)
        m = lp @ (m @ lp.T)
    return m


# --- hashes -----------------------------------------------------------------

# z_reduce halving depth per target size
_Z_LEVELS = {(8, 8): 3, (9, 8): 3, (32, 32): 2, (64, 64): 2}


def _reduce(img: GrayImage, w: int, h: int, reducer: Reducer, omega: float) -> np.ndarray:
    if Reducer(reducer) is Reducer.BOX:
        out = resize_box(img, w, h)
    else:
        out = z_reduce(img, w, h, ZReduceParams(omega, _Z_LEVELS[(w, h)]))
    return out.data.astype(np.int64)


def _quantize(coeffs: np.ndarray) -> np.ndarray:
    return np.round(coeffs, COEFF_DECIMALS) + 0.0  # + 0.0 folds -0.0 into 0.0


def ahash(img: GrayImage, reducer: Reducer = Reducer.BOX, omega: float = DEFAULT_OMEGA) -> Hash64:
    px = _reduce(img, 8, 8, reducer, omega)
    # pixel > mean  <=>  64 * pixel > sum, kept in integers
    bits = 64 * px > px.sum()
    return Hash64(pack_bits(bits), Algo.AHASH, Reducer(reducer) is Reducer.ZTRANSFORM)


def dhash(img: GrayImage, reducer: Reducer = Reducer.BOX, omega: float = DEFAULT_OMEGA) -> Hash64:
    px = _reduce(img, 9, 8, reducer, omega)
    bits = px[:, :8] >= px[:, 1:]
    return Hash64(pack_bits(bits), Algo.DHASH, Reducer(reducer) is Reducer.ZTRANSFORM)


def phash(img: GrayImage, reducer: Reducer = Reducer.BOX, omega: float = DEFAULT_OMEGA) -> Hash64:
    side = 8 * PHASH_FACTOR
    px = _reduce(img, side, side, reducer, omega)
    corner = _quantize(dct2d(px)[:8, :8])
    bits = binarize_gt(corner, median(corner))
    return Hash64(pack_bits(bits), Algo.PHASH, Reducer(reducer) is Reducer.ZTRANSFORM)


def whash(img: GrayImage, wavelet: Wavelet | str = Wavelet.HAAR,
          reducer: Reducer = Reducer.BOX, omega: float = DEFAULT_OMEGA) -> Hash64:
    wavelet = Wavelet(wavelet)
    px = _reduce(img, WHASH_INPUT, WHASH_INPUT, reducer, omega)
    ll = _quantize(dwt2d_ll(px, wavelet, WHASH_LEVELS))
    bits = binarize_gt(ll, median(ll))
    algo = Algo.WHASH_HAAR if wavelet is Wavelet.HAAR else Algo.WHASH_DB4
    return Hash64(pack_bits(bits), algo, Reducer(reducer) is Reducer.ZTRANSFORM)


def compute_hash(img: GrayImage, algo: Algo | str, z_variant: bool = False,
                 omega: float = DEFAULT_OMEGA) -> Hash64:
    algo = Algo(algo)
    reducer = Reducer.ZTRANSFORM if z_variant else Reducer.BOX
    if algo is Algo.AHASH:
        return ahash(img, reducer, omega)
    if algo is Algo.DHASH:
        return dhash(img, reducer, omega)
    if algo is Algo.PHASH:
        return phash(img, reducer, omega)
    wavelet = Wavelet.HAAR if algo is Algo.WHASH_HAAR else Wavelet.DB4
    return whash(img, wavelet, reducer, omega)


def hash_to_float(h: Hash64 | int) -> float:
    """Nearest double to the unsigned hash value (ties to even above 2**53)."""
    return float(h.bits if isinstance(h, Hash64) else h)


def hamming(a: Hash64, b: Hash64) -> int:
    if (a.algo, a.z_variant) != (b.algo, b.z_variant):
        raise HashError(f"cannot compare {a.name} with {b.name}")
    return (a.bits ^ b.bits).bit_count()


def hash_all(img: RgbImage | GrayImage, omega: float = DEFAULT_OMEGA) -> list[Hash64]:
    """All ten hashes in feature order (five box-reduced, then five Z-reduced)."""
    gray = to_grayscale(img) if isinstance(img, RgbImage) else img
    return [compute_hash(gray, algo, z, omega) for algo, z in FEATURE_ORDER]


def extract_features(img: RgbImage | GrayImage, omega: float = DEFAULT_OMEGA) -> np.ndarray:
    """Ten-value float feature vector in the fixed :data:`FEATURE_NAMES` order."""
    return np.array([hash_to_float(h) for h in hash_all(img, omega)], dtype=np.float64)
