"""Score-to-sigma mapping and per-block separable Gaussian smoothing.

Each stride x stride block is filtered independently with its own kernel,
padded by reflecting the block's own content (mirror about the edge sample,
numpy "reflect"). Channels are filtered in float and rounded + clamped to
uint8 once at the end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ImageIOError
from .images import Image, save_image
from .scoring import ScoreGrid

# below this sigma an 11-tap kernel is numerically a delta; skip the convolution
DELTA_SIGMA = 1e-3


@dataclass(frozen=True)
class SigmaGrid:
    stride: int
    sigmas: np.ndarray  # (cells_y, cells_x) float64

    def __post_init__(self):
        sg = np.ascontiguousarray(np.asarray(self.sigmas, dtype=np.float64))
        if sg.ndim != 2 or sg.size == 0:
            raise ConfigError(f"sigmas must be a non-empty 2-D matrix, got shape {sg.shape}")
        if (sg < 0).any():
            raise ConfigError("sigmas must be non-negative")
        object.__setattr__(self, "sigmas", sg)
        self.sigmas.setflags(write=False)

    @property
    def cells_x(self) -> int:
        return self.sigmas.shape[1]

    @property
    def cells_y(self) -> int:
        return self.sigmas.shape[0]


def sigma_map(scores: ScoreGrid, sigma_one: float, sigma_max: float) -> SigmaGrid:
    """Exponential score-to-sigma mapping.

    sigma = sigma_one^score * sigma_max^(1-score), the same curve as
    sigma_one * (sigma_max/sigma_one)^(1-score) but exact at scores 0 and 1.
    """
    if not (0 < sigma_one < sigma_max):
        raise ConfigError(f"require 0 < sigma_one < sigma_max, got {sigma_one}, {sigma_max}")
    s = scores.scores
    sig = np.power(sigma_one, s) * np.power(sigma_max, 1.0 - s)
    return SigmaGrid(scores.stride, sig)


def uniform_sigmas(cells_x: int, cells_y: int, stride: int, sigma: float) -> SigmaGrid:
    """Constant sigma field on the given lattice (global-Gaussian baselines)."""
    if sigma < 0:
        raise ConfigError(f"sigma must be non-negative, got {sigma}")
    return SigmaGrid(stride, np.full((cells_y, cells_x), float(sigma)))


def gaussian_kernel(sigma: float, size: int = 11) -> np.ndarray:
    """Normalized 1-D Gaussian taps; sigma below DELTA_SIGMA gives a delta."""
    if size < 3 or size % 2 == 0:
        raise ConfigError(f"kernel size must be odd and >= 3, got {size}")
    if sigma < 0:
        raise ConfigError(f"sigma must be non-negative, got {sigma}")
    if sigma < DELTA_SIGMA:
        w = np.zeros(size)
        w[size // 2] = 1.0
        return w
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def _separable_filter(block: np.ndarray, kernel: np.ndarray, pad: int) -> np.ndarray:
    """Rows-then-columns convolution of one (s, s, c) float block, reflect-padded."""
    size = kernel.shape[0]
    h, w = block.shape[0], block.shape[1]
    padded = np.pad(block, ((pad, pad), (pad, pad), (0, 0)), mode="reflect")
    rows = np.zeros((h + 2 * pad, w, block.shape[2]))
    for j in range(size):
        rows += kernel[j] * padded[:, j:j + w, :]
    out = np.zeros((h, w, block.shape[2]))
    for j in range(size):
        out += kernel[j] * rows[j:j + h, :, :]
    return out


def filter_blocks(img: Image, sigmas: SigmaGrid, kernel_size: int = 11) -> Image:
    """Apply each cell's Gaussian to its stride x stride block independently."""
    stride = sigmas.stride
    pad = (kernel_size - 1) // 2
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise ConfigError(f"kernel size must be odd and >= 3, got {kernel_size}")
    if stride < pad + 1:
        raise ConfigError(
            f"stride {stride} too small for kernel {kernel_size}: reflection needs stride >= {pad + 1}"
        )
    if img.width != sigmas.cells_x * stride or img.height != sigmas.cells_y * stride:
        raise ImageIOError(
            f"image {img.width}x{img.height} does not match sigma lattice "
            f"{sigmas.cells_x}x{sigmas.cells_y} at stride {stride}"
        )
    src = img.pixels.astype(np.float64)
    out = np.empty_like(src)
    kernels = {}
    for cy in range(sigmas.cells_y):
        y0 = cy * stride
        for cx in range(sigmas.cells_x):
            x0 = cx * stride
            sigma = sigmas.sigmas[cy, cx]
            block = src[y0:y0 + stride, x0:x0 + stride, :]
            if sigma < DELTA_SIGMA:
                out[y0:y0 + stride, x0:x0 + stride, :] = block
                continue
            kernel = kernels.get(sigma)
            if kernel is None:
                kernel = kernels.setdefault(sigma, gaussian_kernel(sigma, kernel_size))
            out[y0:y0 + stride, x0:x0 + stride, :] = _separable_filter(block, kernel, pad)
    return Image(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def dump_sigma_grid(sg: SigmaGrid, path, sigma_max: float) -> None:
    """Write a gray heatmap PNG with sigma mapped linearly onto [0, 255]."""
    path = Path(path)
    gray = np.clip(sg.sigmas / sigma_max, 0.0, 1.0) * 255.0
    px = np.rint(gray).astype(np.uint8)
    save_image(Image(np.repeat(px[:, :, None], 3, axis=2)), path)
    payload = {"stride": sg.stride, "sigma_max": sigma_max, "sigmas": sg.sigmas.tolist()}
    path.with_suffix(".json").write_text(json.dumps(payload, indent=2))
