import numpy as np
import pytest

from semfilter.errors import BackendError, ConfigError
from semfilter.scoring import ScoreGrid, aggregate_scores, score_tiles, uniform_scores
from semfilter.tiling import make_grid


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def embeddings_with_cosines(cosines, dim=8):
    """Text vector e0; tile i = cos*e0 + sqrt(1-cos^2)*e_{i+1} exactly."""
    text = np.zeros(dim)
    text[0] = 1.0
    tiles = np.zeros((len(cosines), dim))
    for i, c in enumerate(cosines):
        tiles[i, 0] = c
        tiles[i, i + 1] = np.sqrt(1.0 - c * c)
    return text, tiles


def test_identical_tiles_uniform_scores():
    text = unit(np.arange(1, 9))
    tile = unit(np.ones(8))
    tiles = np.tile(tile, (4, 1))
    s = score_tiles(text, tiles, 20.0)
    np.testing.assert_allclose(s, np.ones(4), atol=1e-12)


def test_spec_cosine_example_high_precision():
    # cosines [0.3, 0.2, 0.2], logit_scale 20; values frozen from a 50-digit
    # softmax evaluation
    text, tiles = embeddings_with_cosines([0.3, 0.2, 0.2])
    s = score_tiles(text, tiles, 20.0)
    expected = [2.3609581264847955, 0.31952093675760225, 0.31952093675760225]
    np.testing.assert_allclose(s, expected, rtol=1e-13)


def test_singleton_softmax():
    text, tiles = embeddings_with_cosines([0.73])
    np.testing.assert_allclose(score_tiles(text, tiles, 20.0), [1.0], atol=1e-15)


def test_scores_sum_to_k_randomized():
    rng = np.random.default_rng(42)
    for _ in range(200):
        k = int(rng.integers(1, 65))
        dim = int(rng.integers(4, 33))
        text = unit(rng.standard_normal(dim))
        tiles = np.stack([unit(rng.standard_normal(dim)) for _ in range(k)])
        scale = float(rng.choice([1.0, 20.0, 100.0]))
        s = score_tiles(text, tiles, scale)
        assert abs(s.sum() - k) <= 1e-6 * k
        assert (s >= 0).all()


def test_shift_invariance():
    # softmax ignores constant logit shifts; adding a constant to every cosine
    # with the same scale is such a shift
    text, tiles = embeddings_with_cosines([0.1, 0.35, -0.2], dim=8)
    base = score_tiles(text, tiles, 10.0)
    shifted_logits = 10.0 * (tiles @ text) + 123.4
    z = np.exp(shifted_logits - shifted_logits.max())
    np.testing.assert_allclose(base, z / z.sum() * 3, rtol=1e-12)


def test_monotonicity_in_cosine():
    text, tiles = embeddings_with_cosines([0.2, 0.2, 0.2])
    before = score_tiles(text, tiles, 20.0)
    text2, tiles2 = embeddings_with_cosines([0.4, 0.2, 0.2])
    after = score_tiles(text2, tiles2, 20.0)
    assert after[0] > before[0]
    assert after[1] < before[1] and after[2] < before[2]


def test_extreme_logits_stable():
    text, tiles = embeddings_with_cosines([1.0, -1.0])
    s = score_tiles(text, tiles, 1000.0)
    assert np.isfinite(s).all()
    assert abs(s.sum() - 2.0) < 1e-9


def test_dimension_mismatch_and_empty():
    with pytest.raises(BackendError):
        score_tiles(np.ones(4), np.ones((2, 5)), 20.0)
    with pytest.raises(BackendError):
        score_tiles(np.ones(4), np.empty((0, 4)), 20.0)


# --- aggregation --------------------------------------------------------------


def brute_force_cells(grid, scores):
    """Per-pixel cover enumeration, then per-cell value with uniqueness check."""
    cover_sum = np.zeros((grid.resized_height, grid.resized_width))
    cover_cnt = np.zeros_like(cover_sum)
    t = grid.tile_size
    for idx, (x, y) in enumerate(grid.origins):
        cover_sum[y : y + t, x : x + t] += scores[idx]
        cover_cnt[y : y + t, x : x + t] += 1
    per_pixel = cover_sum / cover_cnt
    s = grid.stride
    cells = np.empty((grid.cells_y, grid.cells_x))
    for cy in range(grid.cells_y):
        for cx in range(grid.cells_x):
            block = per_pixel[cy * s : (cy + 1) * s, cx * s : (cx + 1) * s]
            assert np.ptp(block) == 0  # all pixels of a cell share one value
            cells[cy, cx] = block[0, 0]
    return cells


def test_partition_inherits_scores():
    grid = make_grid(448, 224, 224, 224)
    sg = aggregate_scores(grid, np.array([3.0, 0.5]))
    assert sg.scores.shape == (1, 2)
    np.testing.assert_array_equal(sg.scores, [[3.0, 0.5]])


def test_overlap_aggregation_matches_pixel_oracle():
    rng = np.random.default_rng(11)
    for dims, stride in [((448, 448), 112), ((672, 448), 112), ((448, 448), 56), ((896, 672), 224)]:
        grid = make_grid(dims[0], dims[1], 224, stride)
        scores = rng.uniform(0, 3, size=grid.count)
        got = aggregate_scores(grid, scores)
        expected = brute_force_cells(grid, scores)
        np.testing.assert_allclose(got.scores, expected, rtol=1e-12, atol=1e-12)
        assert got.cells_x * stride == dims[0]
        assert got.cells_y * stride == dims[1]


def test_constant_field_survives_aggregation():
    grid = make_grid(448, 448, 224, 112)
    sg = aggregate_scores(grid, np.full(grid.count, 1.7))
    np.testing.assert_allclose(sg.scores, 1.7, rtol=1e-14)


def test_aggregate_length_mismatch():
    grid = make_grid(448, 448, 224, 224)
    with pytest.raises(ConfigError):
        aggregate_scores(grid, np.ones(3))


def test_uniform_scores_all_ones():
    grid = make_grid(672, 448, 224, 112)
    sg = uniform_scores(grid)
    assert sg.scores.shape == (4, 6)
    assert (sg.scores == 1.0).all()


def test_score_grid_is_readonly():
    sg = ScoreGrid(112, np.ones((2, 2)))
    with pytest.raises(ValueError):
        sg.scores[0, 0] = 5
