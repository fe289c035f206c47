"""Backend-agnostic text/image embedding interface plus the deterministic
stub backend used by the test suite and desk-scale benchmarks.

All backends return L2-normalized float64 vectors; text and image vectors
share one dimension per backend.
"""

from __future__ import annotations

import hashlib
import math
from abc import ABC, abstractmethod
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import BackendError
from .images import Image


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if not math.isfinite(norm) or norm < 1e-12:
        raise BackendError("cannot normalize a zero or non-finite vector")
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


class EmbeddingBackend(ABC):
    """Text/image encoder pair with a shared embedding dimension."""

    name: str = "abstract"
    dim: int = 0

    @abstractmethod
    def encode_text(self, text: str) -> np.ndarray:
        """Unit-norm embedding of text (tokenizer hard-truncates long input)."""

    @abstractmethod
    def encode_images(self, images: Sequence[Image]) -> np.ndarray:
        """Unit-norm embeddings, one row per image, order preserved."""

    @abstractmethod
    def count_tokens(self, text: str) -> int:
        """Token count including begin/end markers, before any truncation."""

    def encode_image(self, image: Image) -> np.ndarray:
        return self.encode_images([image])[0]


def encode_tiles(backend: EmbeddingBackend, tiles: Sequence[Image]) -> np.ndarray:
    """Validate tile shapes and embed them; returns a (k, dim) matrix."""
    if len(tiles) == 0:
        raise BackendError("no tiles to encode")
    w, h = tiles[0].width, tiles[0].height
    if w != h:
        raise BackendError(f"tiles must be square, got {w}x{h}")
    for i, tile in enumerate(tiles):
        if tile.width != w or tile.height != h:
            raise BackendError(f"tile {i} is {tile.width}x{tile.height}, expected {w}x{h}")
    return backend.encode_images(tiles)


def image_key(img: Image) -> str:
    """Content digest used to address stub similarity-table entries."""
    h = hashlib.sha256()
    h.update(img.width.to_bytes(4, "big"))
    h.update(img.height.to_bytes(4, "big"))
    h.update(img.pixels.tobytes())
    return h.hexdigest()


def _seeded_unit_vector(data: bytes, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(data).digest()[:8], "big")
    rng = np.random.default_rng(seed)
    return l2_normalize(rng.standard_normal(dim))


class StubBackend(EmbeddingBackend):
    """Deterministic, dependency-free backend.

    Text maps to a hash-seeded unit vector. Images map to zero-mean block
    luminance features (plus a small content-hash tail so flat images stay
    well-defined), which makes embedding cosine behave like a crude
    structural-fidelity measure. An optional similarity table pins the exact
    text-tile cosine for images addressed by image_key(); with a table set,
    every text encodes to the same anchor direction.

    Token counting is whitespace words plus the two begin/end markers.
    """

    name = "stub"

    def __init__(self, dim: int = 64, similarity_table: Optional[Mapping[str, float]] = None):
        side = math.isqrt(dim)
        if side * side != dim or dim < 4:
            raise BackendError(f"stub dim must be a square number >= 4, got {dim}")
        self.dim = dim
        self._side = side
        self._table = dict(similarity_table) if similarity_table is not None else None
        if self._table is not None:
            for key, val in self._table.items():
                if not -1.0 <= val <= 1.0:
                    raise BackendError(f"similarity for {key[:12]}... must be in [-1, 1], got {val}")
        self._anchor = _seeded_unit_vector(b"semfilter-stub-text-anchor", dim)

    def encode_text(self, text: str) -> np.ndarray:
        if self._table is not None:
            return self._anchor.copy()
        joined = " ".join(text.lower().split())
        return _seeded_unit_vector(b"text\x00" + joined.encode("utf-8"), self.dim)

    def encode_images(self, images: Sequence[Image]) -> np.ndarray:
        out = np.empty((len(images), self.dim))
        for i, img in enumerate(images):
            key = image_key(img)
            if self._table is not None:
                out[i] = self._pinned_vector(key)
            else:
                out[i] = self._feature_vector(img, key)
        return out

    def count_tokens(self, text: str) -> int:
        return len(text.split()) + 2

    def _feature_vector(self, img: Image, key: str) -> np.ndarray:
        luma = img.pixels.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
        rows = [np.array_split(r, self._side, axis=1) for r in np.array_split(luma, self._side, axis=0)]
        grid = np.array([[cell.mean() for cell in row] for row in rows])
        feats = (grid - grid.mean()).ravel() / 255.0
        tail = _seeded_unit_vector(b"image\x00" + key.encode(), self.dim)
        scale = float(np.linalg.norm(feats))
        return l2_normalize(feats + tail * (0.01 * scale if scale > 0 else 1.0))

    def _pinned_vector(self, key: str) -> np.ndarray:
        cos = self._table.get(key, 0.0)
        raw = _seeded_unit_vector(b"table\x00" + key.encode(), self.dim)
        perp = raw - np.dot(raw, self._anchor) * self._anchor
        norm = float(np.linalg.norm(perp))
        if norm < 1e-9:
            raw = _seeded_unit_vector(b"table-retry\x00" + key.encode(), self.dim)
            perp = raw - np.dot(raw, self._anchor) * self._anchor
            norm = float(np.linalg.norm(perp))
        perp /= norm
        return cos * self._anchor + math.sqrt(max(0.0, 1.0 - cos * cos)) * perp
