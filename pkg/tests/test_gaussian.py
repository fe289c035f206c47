import numpy as np
import pytest
from scipy.signal import convolve2d

from semfilter.errors import ConfigError, ImageIOError
from semfilter.gaussian import (
    SigmaGrid,
    filter_blocks,
    gaussian_kernel,
    sigma_map,
    uniform_sigmas,
)
from semfilter.images import Image, constant_image
from semfilter.scoring import ScoreGrid

from conftest import checkerboard_image, noise_image


# --- sigma mapping -------------------------------------------------------------


def sg(value, stride=224):
    return ScoreGrid(stride, np.array([[value]]))


def test_sigma_endpoints_exact():
    assert sigma_map(sg(0.0), 0.2, 3.0).sigmas[0, 0] == 3.0
    assert sigma_map(sg(1.0), 0.2, 3.0).sigmas[0, 0] == 0.2


def test_sigma_midpoint_geometric_mean():
    # sqrt(0.2 * 3.0), frozen from 50-digit evaluation
    got = sigma_map(sg(0.5), 0.2, 3.0).sigmas[0, 0]
    assert got == pytest.approx(0.77459666924148338, abs=1e-15)


def test_sigma_score_two():
    got = sigma_map(sg(2.0), 0.2, 3.0).sigmas[0, 0]
    assert got == pytest.approx(0.013333333333333333, rel=1e-14)


def test_sigma_strictly_decreasing():
    scores = np.linspace(0.0, 3.0, 1201)
    sig = sigma_map(ScoreGrid(224, scores[None, :]), 0.2, 3.0).sigmas[0]
    assert (np.diff(sig) < 0).all()


def test_sigma_bounded_by_max_for_nonnegative_scores():
    rng = np.random.default_rng(0)
    scores = rng.uniform(0, 10, size=(5, 7))
    sig = sigma_map(ScoreGrid(224, scores), 0.2, 3.0).sigmas
    assert (sig <= 3.0).all() and (sig > 0).all()


def test_sigma_invalid_bounds():
    with pytest.raises(ConfigError):
        sigma_map(sg(0.5), 3.0, 0.2)
    with pytest.raises(ConfigError):
        sigma_map(sg(0.5), 0.0, 3.0)


# --- kernel --------------------------------------------------------------------


def test_kernel_delta_at_zero_sigma():
    w = gaussian_kernel(0.0, 11)
    assert w[5] == 1.0 and w.sum() == 1.0
    assert np.count_nonzero(w) == 1


def test_kernel_delta_below_threshold():
    w = gaussian_kernel(5e-4, 11)
    assert w[5] == 1.0


def test_kernel_normalized_and_symmetric():
    for sigma in (0.2, 0.7746, 1.0, 3.0, 10.0):
        w = gaussian_kernel(sigma, 11)
        assert abs(w.sum() - 1.0) <= 1e-9
        np.testing.assert_allclose(w, w[::-1], rtol=0, atol=0)


def test_kernel_sigma_one_center_weight():
    # frozen from 50-digit evaluation of the truncated, renormalized kernel
    w = gaussian_kernel(1.0, 11)
    assert w[5] == pytest.approx(0.39894228312200732, rel=1e-14)
    assert w[4] == pytest.approx(0.24197072616925528, rel=1e-14)
    assert w[3] == pytest.approx(0.053990966881377791, rel=1e-14)


def test_kernel_rejects_even_size():
    with pytest.raises(ConfigError):
        gaussian_kernel(1.0, 10)
    with pytest.raises(ConfigError):
        gaussian_kernel(-1.0, 11)


# --- block filtering -----------------------------------------------------------


def oracle_filter(pixels, sigmas, stride, ksize):
    """Brute-force 2-D convolution per block with mirror padding."""
    pad = (ksize - 1) // 2
    out = np.empty_like(pixels, dtype=np.float64)
    src = pixels.astype(np.float64)
    for cy in range(sigmas.shape[0]):
        for cx in range(sigmas.shape[1]):
            k1 = gaussian_kernel(sigmas[cy, cx], ksize)
            k2 = np.outer(k1, k1)
            for c in range(3):
                block = src[cy * stride : (cy + 1) * stride, cx * stride : (cx + 1) * stride, c]
                padded = np.pad(block, pad, mode="reflect")
                out[cy * stride : (cy + 1) * stride, cx * stride : (cx + 1) * stride, c] = (
                    convolve2d(padded, k2, mode="valid")
                )
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def test_constant_image_unchanged():
    img = constant_image(64, 32, (13, 200, 90))
    sig = uniform_sigmas(2, 1, 32, 3.0)
    out = filter_blocks(img, sig, 11)
    assert np.array_equal(out.pixels, img.pixels)


def test_single_block_matches_bruteforce_exactly():
    img = checkerboard_image(32, 32, period=2)
    sig = uniform_sigmas(1, 1, 32, 3.0)
    got = filter_blocks(img, sig, 11)
    expected = oracle_filter(img.pixels, sig.sigmas, 32, 11)
    assert np.array_equal(got.pixels, expected)


def test_mixed_sigma_blocks_match_bruteforce():
    rng = np.random.default_rng(3)
    img = noise_image(96, 64, seed=9)
    sigmas = rng.uniform(0.0, 3.0, size=(2, 3))
    sigmas[0, 0] = 0.0  # exercise the delta-skip path
    sig = SigmaGrid(32, sigmas)
    got = filter_blocks(img, sig, 11)
    expected = oracle_filter(img.pixels, sigmas, 32, 11)
    diff = np.abs(got.pixels.astype(int) - expected.astype(int))
    assert diff.max() <= 1


def test_small_sigma_equals_global_within_one_level():
    # sigma 0.2 kernels are nearly deltas: per-block filtering matches
    # whole-image filtering to 1 gray level
    img = noise_image(64, 64, seed=12)
    per_block = filter_blocks(img, uniform_sigmas(2, 2, 32, 0.2), 11)
    k1 = gaussian_kernel(0.2, 11)
    k2 = np.outer(k1, k1)
    whole = np.empty_like(img.pixels, dtype=np.float64)
    for c in range(3):
        padded = np.pad(img.pixels[..., c].astype(np.float64), 5, mode="reflect")
        whole[..., c] = convolve2d(padded, k2, mode="valid")
    whole = np.clip(np.rint(whole), 0, 255).astype(np.uint8)
    assert np.abs(per_block.pixels.astype(int) - whole.astype(int)).max() <= 1


def test_dc_preserved_per_block():
    img = noise_image(64, 64, seed=21)
    sig = uniform_sigmas(2, 2, 32, 3.0)
    out = filter_blocks(img, sig, 11)
    for cy in range(2):
        for cx in range(2):
            a = img.pixels[cy * 32 : (cy + 1) * 32, cx * 32 : (cx + 1) * 32].mean()
            b = out.pixels[cy * 32 : (cy + 1) * 32, cx * 32 : (cx + 1) * 32].mean()
            assert abs(a - b) <= 0.5


def total_variation(px):
    g = px.astype(np.int64)
    return np.abs(np.diff(g, axis=0)).sum() + np.abs(np.diff(g, axis=1)).sum()


def test_total_variation_never_increases():
    for seed in range(5):
        img = noise_image(64, 64, seed=seed)
        for sigma in (0.5, 1.0, 3.0):
            out = filter_blocks(img, uniform_sigmas(2, 2, 32, sigma), 11)
            assert total_variation(out.pixels) <= total_variation(img.pixels)
    board = checkerboard_image(64, 64)
    out = filter_blocks(board, uniform_sigmas(2, 2, 32, 3.0), 11)
    assert total_variation(out.pixels) < total_variation(board.pixels)


def laplacian_energy(px):
    g = px.astype(np.float64).mean(axis=2)
    lap = -4 * g[1:-1, 1:-1] + g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:]
    return float((lap**2).sum())


def test_higher_score_keeps_more_high_frequency():
    img = noise_image(64, 64, seed=30)
    low = sigma_map(ScoreGrid(32, np.array([[0.2, 1.0], [1.0, 1.0]])), 0.2, 3.0)
    high = sigma_map(ScoreGrid(32, np.array([[1.8, 1.0], [1.0, 1.0]])), 0.2, 3.0)
    out_low = filter_blocks(img, low, 11)
    out_high = filter_blocks(img, high, 11)
    block = np.s_[0:32, 0:32]
    assert laplacian_energy(out_high.pixels[block]) >= laplacian_energy(out_low.pixels[block])


def test_stride_too_small_rejected():
    img = noise_image(8, 8)
    with pytest.raises(ConfigError, match="reflection"):
        filter_blocks(img, uniform_sigmas(2, 2, 4, 1.0), 11)


def test_lattice_mismatch_rejected():
    img = noise_image(64, 64)
    with pytest.raises(ImageIOError):
        filter_blocks(img, uniform_sigmas(3, 2, 32, 1.0), 11)
