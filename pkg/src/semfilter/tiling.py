"""Resize-to-tile-multiple and sliding-window tile grid construction.

The stride is picked automatically from {tile_size, tile_size/2, tile_size/4}
so that the total tile count lands closest to the configured target; ties go
to the larger stride (fewer tiles).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, ImageIOError
from .images import Image, resize_bilinear


@dataclass(frozen=True)
class TileGrid:
    resized_width: int
    resized_height: int
    tile_size: int
    stride: int
    origins: tuple  # ((x, y), ...) row-major

    @property
    def count(self) -> int:
        return len(self.origins)

    @property
    def tiles_x(self) -> int:
        return (self.resized_width - self.tile_size) // self.stride + 1

    @property
    def tiles_y(self) -> int:
        return (self.resized_height - self.tile_size) // self.stride + 1

    @property
    def cells_x(self) -> int:
        return self.resized_width // self.stride

    @property
    def cells_y(self) -> int:
        return self.resized_height // self.stride


def candidate_strides(tile_size: int) -> tuple:
    return (tile_size, tile_size // 2, tile_size // 4)


def _axis_count(dim: int, tile_size: int, stride: int) -> int:
    span = dim - tile_size
    if span % stride != 0:
        raise ConfigError(f"dimension {dim} is not compatible with tile {tile_size} stride {stride}")
    return span // stride + 1


def resize_to_tile_multiple(img: Image, tile_size: int) -> Image:
    """Resize each axis up to the nearest larger multiple of tile_size."""
    if tile_size < 1:
        raise ConfigError(f"tile_size must be >= 1, got {tile_size}")
    new_w = math.ceil(img.width / tile_size) * tile_size
    new_h = math.ceil(img.height / tile_size) * tile_size
    return resize_bilinear(img, new_w, new_h)


def select_stride(resized_w: int, resized_h: int, tile_size: int, tile_num: int,
                  allow_overlap: bool = True) -> int:
    """Pick the candidate stride whose total tile count is closest to tile_num.

    Candidates are scanned largest first, so equidistant counts keep the
    larger stride. With allow_overlap=False the stride is always tile_size.
    """
    if resized_w % tile_size != 0 or resized_h % tile_size != 0:
        raise ConfigError(f"dims {resized_w}x{resized_h} are not multiples of tile_size {tile_size}")
    if not allow_overlap:
        return tile_size
    best_stride, best_dist = None, None
    for stride in candidate_strides(tile_size):
        k = _axis_count(resized_w, tile_size, stride) * _axis_count(resized_h, tile_size, stride)
        dist = abs(k - tile_num)
        if best_dist is None or dist < best_dist:
            best_stride, best_dist = stride, dist
    return best_stride


def make_grid(resized_w: int, resized_h: int, tile_size: int, stride: int) -> TileGrid:
    if resized_w % tile_size != 0 or resized_h % tile_size != 0:
        raise ConfigError(f"dims {resized_w}x{resized_h} are not multiples of tile_size {tile_size}")
    if stride not in candidate_strides(tile_size):
        raise ConfigError(f"stride {stride} not in {candidate_strides(tile_size)}")
    xs = range(0, resized_w - tile_size + 1, stride)
    ys = range(0, resized_h - tile_size + 1, stride)
    origins = tuple((x, y) for y in ys for x in xs)
    return TileGrid(resized_w, resized_h, tile_size, stride, origins)


def plan_grid(resized: Image, tile_size: int, tile_num: int, allow_overlap: bool = True) -> TileGrid:
    stride = select_stride(resized.width, resized.height, tile_size, tile_num, allow_overlap)
    return make_grid(resized.width, resized.height, tile_size, stride)


def extract_tiles(img: Image, grid: TileGrid) -> list:
    """Copy out the tile_size x tile_size crops in row-major origin order."""
    if img.width != grid.resized_width or img.height != grid.resized_height:
        raise ImageIOError(
            f"image {img.width}x{img.height} does not match grid "
            f"{grid.resized_width}x{grid.resized_height}"
        )
    t = grid.tile_size
    return [Image(img.pixels[y:y + t, x:x + t].copy()) for x, y in grid.origins]
