"""Tile relevance scoring and aggregation onto the stride grid.

Tile scores are softmax(logit_scale * cosines) * k, so they always sum to k
and average 1 regardless of the tile count. Overlapping strides are merged
by averaging every covering tile's score into each stride x stride cell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BackendError, ConfigError
from .images import Image, save_image
from .tiling import TileGrid


@dataclass(frozen=True)
class ScoreGrid:
    stride: int
    scores: np.ndarray  # (cells_y, cells_x) float64

    def __post_init__(self):
        sc = np.ascontiguousarray(np.asarray(self.scores, dtype=np.float64))
        if sc.ndim != 2 or sc.size == 0:
            raise ConfigError(f"scores must be a non-empty 2-D matrix, got shape {sc.shape}")
        object.__setattr__(self, "scores", sc)
        self.scores.setflags(write=False)

    @property
    def cells_x(self) -> int:
        return self.scores.shape[1]

    @property
    def cells_y(self) -> int:
        return self.scores.shape[0]


def score_tiles(text_emb: np.ndarray, tile_embs: np.ndarray, logit_scale: float) -> np.ndarray:
    """Softmax-scaled text-tile similarity scores, length k, summing to k."""
    text_emb = np.asarray(text_emb, dtype=np.float64)
    tile_embs = np.atleast_2d(np.asarray(tile_embs, dtype=np.float64))
    if tile_embs.shape[0] == 0:
        raise BackendError("need at least one tile embedding")
    if text_emb.ndim != 1 or tile_embs.shape[1] != text_emb.shape[0]:
        raise BackendError(
            f"embedding dimension mismatch: text {text_emb.shape} vs tiles {tile_embs.shape}"
        )
    k = tile_embs.shape[0]
    logits = logit_scale * (tile_embs @ text_emb)
    z = np.exp(logits - logits.max())
    return z / z.sum() * k


def aggregate_scores(grid: TileGrid, scores: np.ndarray) -> ScoreGrid:
    """Average tile scores onto the stride lattice.

    A cell is covered by every tile whose footprint contains it; with
    stride == tile_size each cell inherits its single tile's score.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (grid.count,):
        raise ConfigError(f"expected {grid.count} scores, got shape {scores.shape}")
    nx, ny = grid.tiles_x, grid.tiles_y
    reach = grid.tile_size // grid.stride  # cells spanned by one tile per axis
    s2 = scores.reshape(ny, nx)

    # prefix sums let each cell read its covering-tile window in O(1)
    prefix = np.zeros((ny + 1, nx + 1))
    prefix[1:, 1:] = s2.cumsum(axis=0).cumsum(axis=1)

    cx = np.arange(grid.cells_x)
    cy = np.arange(grid.cells_y)
    lo_x, hi_x = np.maximum(0, cx - reach + 1), np.minimum(cx, nx - 1)
    lo_y, hi_y = np.maximum(0, cy - reach + 1), np.minimum(cy, ny - 1)

    win = (
        prefix[np.ix_(hi_y + 1, hi_x + 1)]
        - prefix[np.ix_(lo_y, hi_x + 1)]
        - prefix[np.ix_(hi_y + 1, lo_x)]
        + prefix[np.ix_(lo_y, lo_x)]
    )
    counts = np.outer(hi_y - lo_y + 1, hi_x - lo_x + 1)
    return ScoreGrid(grid.stride, win / counts)


def uniform_scores(grid: TileGrid) -> ScoreGrid:
    """All-ones score field (the scoring-disabled ablation)."""
    return ScoreGrid(grid.stride, np.ones((grid.cells_y, grid.cells_x)))


def dump_score_grid(sg: ScoreGrid, prefix) -> None:
    """Write <prefix>.png (gray heatmap, scaled by the max score) and <prefix>.json."""
    prefix = Path(prefix)
    peak = float(sg.scores.max())
    gray = np.zeros_like(sg.scores) if peak <= 0 else sg.scores / peak * 255.0
    px = np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    save_image(Image(np.repeat(px[:, :, None], 3, axis=2)), prefix.with_suffix(".png"))
    payload = {"stride": sg.stride, "scores": sg.scores.tolist()}
    prefix.with_suffix(".json").write_text(json.dumps(payload, indent=2))
