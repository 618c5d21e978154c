import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from crackhash.hashing import (
    FEATURE_NAMES,
    Algo,
    Hash64,
    HashError,
    Reducer,
    Wavelet,
    ahash,
    binarize_gt,
    compute_hash,
    dct2d,
    dhash,
    dwt2d_ll,
    dwt_analysis_matrix,
    extract_features,
    hamming,
    hash_all,
    hash_to_float,
    median,
    pack_bits,
    phash,
    unpack_bits,
    wavelet_filter,
    whash,
)
from crackhash.imaging import GrayImage, RgbImage, resize_bilinear

ALL_ONES = 0xFFFFFFFFFFFFFFFF


def test_binarize_is_strict():
    m = np.array([[1, 3], [2, 4]])
    assert binarize_gt(m, 2.5).astype(int).tolist() == [[0, 1], [0, 1]]
    assert not binarize_gt(np.full((8, 8), 7.0), 7.0).any()
    with pytest.raises(HashError):
        binarize_gt(np.array([]), 0)


def test_binarize_against_elementwise_oracle(rng):
    m = rng.normal(size=(8, 8))
    mean = m.mean()
    assert binarize_gt(m, mean).tolist() == [[bool(v > mean) for v in row] for row in m.tolist()]


def test_pack_bits_convention():
    assert pack_bits(np.zeros((8, 8), bool)) == 0
    assert pack_bits(np.ones((8, 8), bool)) == ALL_ONES
    b = np.zeros((8, 8), bool)
    b[0, 0] = True
    assert pack_bits(b) == 0x8000000000000000
    b = np.zeros((8, 8), bool)
    b[7, 7] = True
    assert pack_bits(b) == 1
    with pytest.raises(HashError):
        pack_bits(np.zeros((8, 9), bool))


@given(st.integers(0, ALL_ONES))
def test_pack_unpack_round_trip(value):
    bits = unpack_bits(value)
    assert pack_bits(bits) == value
    assert pack_bits(bits) == oracles.pack(bits)
    assert (unpack_bits(pack_bits(bits)) == bits).all()


def test_median_even_count():
    assert median(np.array([4.0, 1.0, 3.0, 2.0])) == 2.5
    assert median(np.array([5.0, 1.0, 3.0])) == 3.0


def test_ahash_forced_values():
    assert ahash(GrayImage.constant(77, 227, 227)).bits == 0
    half = np.zeros((8, 8), np.uint8)
    half[:, 4:] = 255
    assert ahash(GrayImage(half)).bits == 0x0F0F0F0F0F0F0F0F


def test_dhash_forced_values():
    assert dhash(GrayImage.constant(77, 227, 227)).bits == ALL_ONES
    ramp = np.tile(np.arange(9) * 20, (8, 1))
    assert dhash(GrayImage(ramp)).bits == 0
    assert dhash(GrayImage(ramp[:, ::-1])).bits == ALL_ONES


def test_dct_constant_and_zero():
    c = dct2d(np.full((8, 8), 5.0))
    assert c[0, 0] == pytest.approx(40.0, abs=1e-12)   # sqrt(1/8) * 8 * 5 per axis, twice
    c[0, 0] = 0
    assert np.abs(c).max() < 1e-12
    assert not dct2d(np.zeros((16, 16))).any()
    with pytest.raises(HashError):
        dct2d(np.zeros((4, 5)))
    with pytest.raises(HashError):
        dct2d(np.zeros((1, 1)))


def test_dct_matches_direct_sum(rng):
    m = rng.integers(0, 256, (32, 32)).astype(float)
    np.testing.assert_allclose(dct2d(m)[:8, :8], oracles.dct_corner(m), rtol=0, atol=1e-9)


def test_dct_energy(rng):
    for _ in range(20):
        m = rng.normal(size=(32, 32)) * 100
        assert abs((dct2d(m) ** 2).sum() / (m ** 2).sum() - 1) < 1e-9


def test_phash_forced_values():
    assert phash(GrayImage.constant(200, 227, 227)).bits == 0x8000000000000000
    assert phash(GrayImage.constant(0, 227, 227)).bits == 0


def test_db4_filter_is_the_daubechies_spectral_factor():
    lo, hi = wavelet_filter(Wavelet.DB4)
    np.testing.assert_allclose(lo, oracles.daubechies_lowpass(4), atol=1e-12)
    assert lo.sum() == pytest.approx(math.sqrt(2), abs=1e-14)
    for m in range(4):  # high-pass annihilates polynomials up to degree 3
        assert abs(np.sum(hi * np.arange(8) ** m)) < 1e-9
    np.testing.assert_allclose(wavelet_filter(Wavelet.HAAR)[0], oracles.daubechies_lowpass(1), atol=1e-15)


@pytest.mark.parametrize("wavelet", list(Wavelet))
@pytest.mark.parametrize("n", [2, 4, 8, 16, 64])
def test_dwt_level_is_orthogonal(wavelet, n):
    a = dwt_analysis_matrix(n, wavelet)
    np.testing.assert_allclose(a @ a.T, np.eye(n), atol=1e-12)


def test_dwt_examples():
    a, b, c, d = 3.0, 10.0, 7.0, 200.0
    assert dwt2d_ll(np.array([[a, b], [c, d]]), "haar", 1)[0, 0] == pytest.approx((a + b + c + d) / 2)
    for levels in (1, 2, 3):
        ll = dwt2d_ll(np.full((32, 32), 9.0), "haar", levels)
        np.testing.assert_allclose(ll, 9.0 * 2 ** levels, atol=1e-10)
        ll = dwt2d_ll(np.full((32, 32), 9.0), "db4", levels)
        np.testing.assert_allclose(ll, 9.0 * 2 ** levels, atol=1e-10)
    assert not dwt2d_ll(np.zeros((16, 16)), "db4", 2).any()
    with pytest.raises(HashError):
        dwt2d_ll(np.zeros((12, 12)), "haar", 3)


@pytest.mark.parametrize("wavelet", ["haar", "db4"])
def test_dwt_matches_roll_oracle(rng, wavelet):
    m = rng.integers(0, 256, (64, 64)).astype(float)
    lo = wavelet_filter(wavelet)[0]
    np.testing.assert_allclose(dwt2d_ll(m, wavelet, 3), oracles.dwt_ll(m, lo, 3), atol=1e-9)


def test_whash_forced_values():
    for wavelet in Wavelet:
        assert whash(GrayImage.constant(123, 227, 227), wavelet).bits == 0


def test_whash_haar_is_block_mean_threshold(rng):
    means = rng.permutation(np.arange(64) * 3 + 10).reshape(8, 8)
    px = np.kron(means, np.ones((8, 8), dtype=np.int64))
    bits = means > np.median(means)
    assert whash(GrayImage(px), "haar").bits == pack_bits(bits)


def test_hash_to_float():
    assert hash_to_float(0) == 0.0
    assert hash_to_float(1) == 1.0
    assert hash_to_float(ALL_ONES) == 18446744073709551616.0
    # 2**53 + 1 ties between 2**53 and 2**53 + 2 and rounds to even
    assert hash_to_float(2 ** 53 + 1) == float(2 ** 53)
    assert hash_to_float(2 ** 53 + 3) == float(2 ** 53 + 4)
    assert hash_to_float(Hash64(5, Algo.AHASH)) == 5.0


def test_hamming():
    a = Hash64(0xF0, Algo.AHASH)
    assert hamming(a, a) == 0
    assert hamming(Hash64(0, Algo.PHASH), Hash64(ALL_ONES, Algo.PHASH)) == 64
    assert hamming(a, Hash64(0x0F, Algo.AHASH)) == 8
    with pytest.raises(HashError):
        hamming(a, Hash64(0x0F, Algo.DHASH))
    with pytest.raises(HashError):
        hamming(a, Hash64(0x0F, Algo.AHASH, z_variant=True))


def test_hash_hex_rendering():
    assert Hash64(0xAB, Algo.AHASH).hex == "00000000000000ab"
    with pytest.raises(HashError):
        Hash64(1 << 64, Algo.AHASH)


def test_feature_vector_for_white_image():
    white = RgbImage(np.full((227, 227, 3), 255, np.uint8))
    f = extract_features(white)
    expected = [0.0, float(ALL_ONES), float(0x8000000000000000), 0.0, 0.0] * 2
    assert f.tolist() == expected
    assert len(FEATURE_NAMES) == 10
    assert FEATURE_NAMES[0] == "ahash" and FEATURE_NAMES[-1] == "z_whash_db4"


def test_feature_vector_is_concatenation_of_hashes(fixture_root):
    from crackhash.imaging import load_rgb, to_grayscale

    img = load_rgb(next((fixture_root / "Positive").glob("*.png")))
    gray = to_grayscale(img)
    f = extract_features(img)
    single = [hash_to_float(compute_hash(gray, algo, z)) for z in (False, True) for algo in Algo]
    assert f.tolist() == single
    assert np.all(np.isfinite(f)) and np.all(f >= 0)
    assert [h.name for h in hash_all(img)] == FEATURE_NAMES


def hash_with_oracle(px, algo, z):
    if algo is Algo.AHASH:
        return oracles.ahash(px, z)
    if algo is Algo.DHASH:
        return oracles.dhash(px, z)
    if algo is Algo.PHASH:
        return oracles.phash(px, z)
    lo = oracles.HAAR if algo is Algo.WHASH_HAAR else oracles.daubechies_lowpass(4)
    return oracles.whash(px, lo, z)


@pytest.mark.parametrize("algo", list(Algo))
@pytest.mark.parametrize("z", [False, True])
def test_hashes_match_oracle_on_random_images(algo, z):
    rng = np.random.default_rng([list(Algo).index(algo), int(z)])
    for _ in range(15):
        h, w = rng.integers(8, 160, size=2)
        px = rng.integers(0, 256, (h, w))
        assert compute_hash(GrayImage(px), algo, z).bits == hash_with_oracle(px, algo, z)


def test_reducer_enum_accepted():
    img = GrayImage(np.random.default_rng(3).integers(0, 256, (50, 50)))
    assert ahash(img, Reducer.ZTRANSFORM).z_variant
    assert ahash(img, "z") == ahash(img, Reducer.ZTRANSFORM)


def smooth_image(seed, size=96):
    rng = np.random.default_rng(seed)
    coarse = rng.integers(0, 256, (6, 6))
    return resize_bilinear(GrayImage(coarse), size, size)


@pytest.mark.parametrize("algo", [Algo.AHASH, Algo.PHASH, Algo.WHASH_HAAR, Algo.WHASH_DB4])
def test_hashes_survive_upscaling(algo):
    for seed in range(10):
        img = smooth_image(seed)
        big = resize_bilinear(img, 2 * img.width, 2 * img.height)
        assert hamming(compute_hash(img, algo), compute_hash(big, algo)) <= 12


def test_hashes_survive_upscaling_on_fixture_images(fixture_root):
    from crackhash.imaging import load_rgb, to_grayscale

    for path in sorted((fixture_root / "Negative").glob("*.png"))[:5]:
        img = to_grayscale(load_rgb(path))
        big = resize_bilinear(img, 2 * img.width, 2 * img.height)
        for algo in (Algo.AHASH, Algo.PHASH, Algo.WHASH_HAAR, Algo.WHASH_DB4):
            assert hamming(compute_hash(img, algo), compute_hash(big, algo)) <= 12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_hashing_is_deterministic(seed):
    px = np.random.default_rng(seed).integers(0, 256, (40, 33, 3), dtype=np.uint8)
    assert extract_features(RgbImage(px)).tolist() == extract_features(RgbImage(px.copy())).tolist()
