"""8-bit RGB image value type and file IO.

Pixel layout is row-major interleaved RGB everywhere in the pipeline;
filtering math happens in float and is rounded+clamped back to uint8 only
at the very end (see gaussian.filter_blocks).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import ImageIOError

_SUPPORTED_SUFFIXES = {".png", ".ppm", ".pgm", ".bmp", ".jpg", ".jpeg"}


@dataclass(frozen=True)
class Image:
    """Immutable 8-bit RGB raster, pixels shaped (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.ndim != 3 or px.shape[2] != 3:
            raise ImageIOError(f"expected (h, w, 3) pixel array, got shape {getattr(px, 'shape', None)}")
        if px.dtype != np.uint8:
            raise ImageIOError(f"expected uint8 pixels, got {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ImageIOError(f"zero-dimension image: {px.shape[1]}x{px.shape[0]}")
        if not px.flags.c_contiguous:
            object.__setattr__(self, "pixels", np.ascontiguousarray(px))
        self.pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        return cls(np.asarray(arr, dtype=np.uint8))

    def to_pil(self) -> PILImage.Image:
        return PILImage.fromarray(self.pixels, mode="RGB")


def load_image(path) -> Image:
    """Decode a PNG/PPM/BMP/JPEG file to an RGB Image.

    Grayscale inputs are replicated to three channels; palette and alpha
    images are flattened to RGB.
    """
    path = Path(path)
    if path.suffix.lower() not in _SUPPORTED_SUFFIXES:
        raise ImageIOError(f"unsupported format: {path.name}")
    try:
        with PILImage.open(path) as pil:
            pil.load()
            if pil.mode != "RGB":
                pil = pil.convert("RGB")
            arr = np.asarray(pil, dtype=np.uint8)
    except FileNotFoundError:
        raise ImageIOError(f"unreadable: no such file {path}") from None
    except UnidentifiedImageError:
        raise ImageIOError(f"unsupported format: cannot identify {path}") from None
    except OSError as exc:
        raise ImageIOError(f"unreadable: {path}: {exc}") from None
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageIOError(f"zero-dimension image: {path}")
    return Image(arr)


def save_image(img: Image, path) -> None:
    """Write an Image to disk; format follows the suffix (default PNG)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        if path.suffix:
            img.to_pil().save(path)
        else:
            img.to_pil().save(path, format="PNG")
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from None


def constant_image(width: int, height: int, rgb=(128, 128, 128)) -> Image:
    px = np.empty((height, width, 3), dtype=np.uint8)
    px[..., 0], px[..., 1], px[..., 2] = rgb
    return Image(px)


def resize_bilinear(img: Image, width: int, height: int) -> Image:
    """Bilinear resample to exactly width x height."""
    if width < 1 or height < 1:
        raise ImageIOError(f"invalid target size {width}x{height}")
    if width == img.width and height == img.height:
        return Image(img.pixels.copy())
    pil = img.to_pil().resize((width, height), resample=PILImage.Resampling.BILINEAR)
    return Image(np.asarray(pil, dtype=np.uint8))
