"""ONNX-backed embedding backend loading a converted model assets directory.

Expected layout (produced by the export tool):
    metadata.json   dim, context_window, image_size, mean/std, file names
    vision.onnx     image tower: float32 NCHW -> (N, dim) features
    text.onnx       text tower: int64 (N, context_window) ids -> (N, dim)
    vocab.json / merges.txt
    goldens.json    fixture texts/tiles with reference embeddings
    fixtures/*.png  golden tile images

The assets directory defaults to $SEMFILTER_MODEL_DIR. onnxruntime is
imported lazily; a session_factory can be injected instead (tests use
torch-backed fakes).
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .bpe import ClipBpeTokenizer
from .embedding import EmbeddingBackend, cosine, l2_normalize
from .errors import BackendError
from .images import Image, load_image

MODEL_DIR_ENV = "SEMFILTER_MODEL_DIR"


def _onnxruntime_session(path: Path):
    try:
        import onnxruntime  # noqa: PLC0415 - optional heavyweight dependency
    except ImportError:
        raise BackendError(
            "onnxruntime is required for the neural backend; install the "
            "'semfilter[neural]' extra or inject a session_factory"
        ) from None
    return onnxruntime.InferenceSession(str(path), providers=["CPUExecutionProvider"])


def resolve_assets_dir(assets_dir=None) -> Path:
    if assets_dir is None:
        assets_dir = os.environ.get(MODEL_DIR_ENV)
    if not assets_dir:
        raise BackendError(f"no model assets directory: pass --model-dir or set {MODEL_DIR_ENV}")
    path = Path(assets_dir)
    if not (path / "metadata.json").is_file():
        raise BackendError(f"{path} does not look like an assets directory (missing metadata.json)")
    return path


class NeuralBackend(EmbeddingBackend):
    name = "neural"

    def __init__(self, assets_dir=None, batch_size: int = 8,
                 session_factory: Optional[Callable] = None):
        self.assets_dir = resolve_assets_dir(assets_dir)
        try:
            meta = json.loads((self.assets_dir / "metadata.json").read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise BackendError(f"cannot read metadata.json: {exc}") from None
        try:
            self.dim = int(meta["dim"])
            self.context_window = int(meta["context_window"])
            self.image_size = int(meta["image_size"])
            self._mean = np.asarray(meta["mean"], dtype=np.float32).reshape(3, 1, 1)
            self._std = np.asarray(meta["std"], dtype=np.float32).reshape(3, 1, 1)
            vision_file = meta["vision_model"]
            text_file = meta["text_model"]
            vocab_file = meta["vocab_file"]
            merges_file = meta["merges_file"]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"metadata.json is incomplete: {exc}") from None
        self.model_name = meta.get("name", "neural")
        self.batch_size = int(batch_size)
        self.tokenizer = ClipBpeTokenizer(
            self.assets_dir / vocab_file, self.assets_dir / merges_file, self.context_window
        )
        factory = session_factory or _onnxruntime_session
        try:
            self._vision = factory(self.assets_dir / vision_file)
            self._text = factory(self.assets_dir / text_file)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"failed to load model sessions: {exc}") from None
        self._vision_input = self._vision.get_inputs()[0].name
        self._text_input = self._text.get_inputs()[0].name

    def encode_text(self, text: str) -> np.ndarray:
        ids = self.tokenizer.encode(text)
        padded = np.zeros((1, self.context_window), dtype=np.int64)
        padded[0, : len(ids)] = ids
        try:
            (features,) = self._text.run(None, {self._text_input: padded})
        except Exception as exc:
            raise BackendError(f"text inference failed: {exc}") from None
        return l2_normalize(np.asarray(features, dtype=np.float64)[0])

    def encode_images(self, images: Sequence[Image]) -> np.ndarray:
        batch = self._preprocess(images)
        out = np.empty((len(images), self.dim))
        for start in range(0, len(images), self.batch_size):
            chunk = batch[start : start + self.batch_size]
            try:
                (features,) = self._vision.run(None, {self._vision_input: chunk})
            except Exception as exc:
                raise BackendError(f"vision inference failed: {exc}") from None
            features = np.asarray(features, dtype=np.float64)
            for i, row in enumerate(features):
                out[start + i] = l2_normalize(row)
        return out

    def count_tokens(self, text: str) -> int:
        return self.tokenizer.count(text)

    def _preprocess(self, images: Sequence[Image]) -> np.ndarray:
        n = self.image_size
        batch = np.empty((len(images), 3, n, n), dtype=np.float32)
        for i, img in enumerate(images):
            if img.width != n or img.height != n:
                raise BackendError(f"image {i} is {img.width}x{img.height}, model expects {n}x{n}")
            chw = img.pixels.astype(np.float32).transpose(2, 0, 1) / 255.0
            batch[i] = (chw - self._mean) / self._std
        return batch


def load_goldens(assets_dir) -> dict:
    path = Path(assets_dir) / "goldens.json"
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BackendError(f"cannot read goldens.json: {exc}") from None


def verify_goldens(backend: NeuralBackend, min_cosine: float = 0.999) -> list:
    """Re-embed the golden fixtures and compare against stored vectors.

    Returns [(label, cosine), ...]; raises BackendError if any falls below
    min_cosine.
    """
    goldens = load_goldens(backend.assets_dir)
    results = []
    for entry in goldens.get("texts", []):
        got = backend.encode_text(entry["text"])
        results.append((f"text:{entry['text'][:32]}", cosine(got, np.asarray(entry["embedding"]))))
    for entry in goldens.get("tiles", []):
        img = load_image(backend.assets_dir / entry["file"])
        got = backend.encode_image(img)
        results.append((f"tile:{entry['file']}", cosine(got, np.asarray(entry["embedding"]))))
    bad = [(label, c) for label, c in results if c < min_cosine]
    if bad:
        raise BackendError(f"golden check failed (min_cosine={min_cosine}): {bad}")
    return results
