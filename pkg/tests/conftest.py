"""Shared fixtures: deterministic synthetic images."""

import numpy as np
import pytest

from semfilter.images import Image


def noise_image(width, height, seed=0):
    rng = np.random.default_rng(seed)
    return Image(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def gradient_image(width, height, seed=0):
    """Smooth photo-like content: crossed gradients plus a few soft disks."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = 80 + 60 * xx / max(width - 1, 1) + 50 * yy / max(height - 1, 1)
    img = np.stack([base, base * 0.9 + 10, base * 0.8 + 25], axis=-1)
    for _ in range(4):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        radius = rng.uniform(0.1, 0.3) * min(width, height)
        mask = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * radius**2))
        color = rng.uniform(-60, 60, size=3)
        img += mask[..., None] * color
    return Image(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def texture_image(width, height, seed=0):
    """High-frequency gratings with noise, compresses badly without smoothing."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = 128 + 60 * np.sin(xx * rng.uniform(0.5, 1.5)) * np.cos(yy * rng.uniform(0.5, 1.5))
    img = img[..., None] + rng.normal(0, 35, size=(height, width, 3))
    return Image(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def photo_image(width, height, seed=0):
    """Photo-like content: gradient scene plus film-grain and a few edges."""
    rng = np.random.default_rng(seed)
    base = gradient_image(width, height, seed=seed).pixels.astype(np.float64)
    base += rng.normal(0, 7, size=base.shape)  # fine grain
    for _ in range(3):  # hard rectangle edges
        x0, y0 = rng.integers(0, width // 2), rng.integers(0, height // 2)
        w, h = rng.integers(width // 8, width // 3), rng.integers(height // 8, height // 3)
        base[y0 : y0 + h, x0 : x0 + w] += rng.uniform(-45, 45, size=3)
    return Image(np.clip(np.rint(base), 0, 255).astype(np.uint8))


def checkerboard_image(width, height, period=2):
    yy, xx = np.mgrid[0:height, 0:width]
    cells = ((xx // period + yy // period) % 2) * 255
    return Image(np.repeat(cells[..., None], 3, axis=2).astype(np.uint8))


@pytest.fixture
def small_noise():
    return noise_image(64, 48, seed=7)


@pytest.fixture
def photo_224():
    return gradient_image(224, 224, seed=3)
