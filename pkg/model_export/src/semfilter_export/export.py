"""Convert a TinyCLIP checkpoint into the assets directory the prefilter's
neural backend loads.

Output layout:
    metadata.json            dim, context window, image size, mean/std, files
    vision.onnx / text.onnx  projected-feature towers, dynamic batch axis
    vocab.json / merges.txt  byte-pair tokenizer tables
    goldens.json             >= 3 fixture texts and tiles with reference
                             embeddings (JSON float arrays) and token ids
    fixtures/tile_*.png      golden tile images
    manifest.json            file hashes + self-check record (written last)

The exported models are verified against the torch reference embeddings
(cosine >= 0.999 per fixture) before manifest.json is written; a failing
self-check aborts the export. The ONNX exporter and the inference-session
factory are injectable so the flow can be tested without onnx/onnxruntime.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import torch
from PIL import Image

log = logging.getLogger("semfilter_export")

# paper-named variants; any HF id or local path also works
CHECKPOINT_ALIASES = {
    "57M": "wkcn/TinyCLIP-auto-ViT-22M-32-Text-10M-LAION400M",
    "23M": "wkcn/TinyCLIP-ViT-8M-16-Text-3M-YFCC15M",
    "120M": "wkcn/TinyCLIP-auto-ViT-63M-32-Text-31M-LAION400M",
}

OPENAI_CLIP_MEAN = [0.48145466, 0.4578275, 0.40821073]
OPENAI_CLIP_STD = [0.26862954, 0.26130258, 0.27577711]

FIXTURE_TEXTS = [
    "a photo of a red car parked on the street",
    "a dog running across a grassy park",
    "a city skyline at night with bright windows",
]

MIN_COSINE = 0.999


class ExportError(RuntimeError):
    pass


@dataclass
class LoadedCheckpoint:
    name: str
    model: "torch.nn.Module"
    tokenizer: object
    image_size: int
    context_window: int
    dim: int
    mean: list
    std: list
    logit_scale: float


def _pooled(output):
    # transformers >= 5 returns an output object with projected features in
    # pooler_output; older versions return the tensor directly
    return output.pooler_output if hasattr(output, "pooler_output") else output


class VisionTower(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, pixel_values):
        return _pooled(self.model.get_image_features(pixel_values=pixel_values))


class TextTower(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, input_ids):
        return _pooled(self.model.get_text_features(input_ids=input_ids))


def load_checkpoint(checkpoint: str) -> LoadedCheckpoint:
    """Load a CLIP-family checkpoint from the hub or a local path."""
    from transformers import CLIPModel, CLIPTokenizer

    source = CHECKPOINT_ALIASES.get(checkpoint, checkpoint)
    try:
        model = CLIPModel.from_pretrained(source).eval()
        tokenizer = CLIPTokenizer.from_pretrained(source)
    except Exception as exc:
        raise ExportError(f"cannot load checkpoint {source!r}: {exc}") from None
    mean, std = OPENAI_CLIP_MEAN, OPENAI_CLIP_STD
    try:
        from transformers import CLIPImageProcessor

        proc = CLIPImageProcessor.from_pretrained(source)
        mean = list(proc.image_mean)
        std = list(proc.image_std)
    except Exception:
        log.warning("no image processor config; using the stock CLIP mean/std")
    config = model.config
    return LoadedCheckpoint(
        name=source,
        model=model,
        tokenizer=tokenizer,
        image_size=int(config.vision_config.image_size),
        context_window=int(config.text_config.max_position_embeddings),
        dim=int(config.projection_dim),
        mean=mean,
        std=std,
        logit_scale=float(model.logit_scale.exp().item()),
    )


def fixture_tiles(image_size: int) -> list:
    """Three deterministic tiles: gradient, checkerboard, rings."""
    n = image_size
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    gradient = np.stack(
        [255 * xx / (n - 1), 255 * yy / (n - 1), np.full((n, n), 96.0)], axis=-1
    )
    checker = ((xx // max(n // 8, 1) + yy // max(n // 8, 1)) % 2) * 255.0
    checker = np.stack([checker, 255 - checker, np.full((n, n), 128.0)], axis=-1)
    r = np.hypot(xx - (n - 1) / 2, yy - (n - 1) / 2)
    rings = (np.sin(r / max(n / 24, 1.0)) * 0.5 + 0.5) * 255.0
    rings = np.stack([rings, rings * 0.6 + 40, 255 - rings], axis=-1)
    return [np.clip(np.rint(t), 0, 255).astype(np.uint8) for t in (gradient, checker, rings)]


def preprocess_tiles(tiles: Sequence[np.ndarray], mean, std) -> np.ndarray:
    mean = np.asarray(mean, dtype=np.float32).reshape(3, 1, 1)
    std = np.asarray(std, dtype=np.float32).reshape(3, 1, 1)
    batch = np.stack(
        [

            (tile.astype(np.float32).transpose(2, 0, 1) / 255.0 - mean) / std
            for tile in tiles
        ]
    )
    return batch


def tokenize_padded(tokenizer, texts: Sequence[str], context_window: int):
    """Token ids via the reference tokenizer, plus 0-padded fixed-length array."""
    unpadded = []
    for text in texts:
        ids = tokenizer(text, truncation=True, max_length=context_window).input_ids
        unpadded.append(list(ids))
    padded = np.zeros((len(texts), context_window), dtype=np.int64)
    for i, ids in enumerate(unpadded):
        padded[i, : len(ids)] = ids
    return unpadded, padded


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


def compute_goldens(loaded: LoadedCheckpoint, tiles: Sequence[np.ndarray]) -> dict:
    """Reference embeddings straight from the torch model."""
    unpadded, padded = tokenize_padded(loaded.tokenizer, FIXTURE_TEXTS, loaded.context_window)
    with torch.no_grad():
        text_feats = _pooled(loaded.model.get_text_features(input_ids=torch.from_numpy(padded)))
        pixel = torch.from_numpy(preprocess_tiles(tiles, loaded.mean, loaded.std))
        tile_feats = _pooled(loaded.model.get_image_features(pixel_values=pixel))
    text_feats = _normalize_rows(text_feats.numpy().astype(np.float64))
    tile_feats = _normalize_rows(tile_feats.numpy().astype(np.float64))
    return {
        "texts": [
            {"text": text, "token_ids": ids, "embedding": emb.tolist()}
            for text, ids, emb in zip(FIXTURE_TEXTS, unpadded, text_feats)
        ],
        "tiles": [
            {"file": f"fixtures/tile_{i}.png", "embedding": emb.tolist()}
            for i, emb in enumerate(tile_feats)
        ],
    }


def default_onnx_exporter(module: torch.nn.Module, example: torch.Tensor, path: Path,
                          input_name: str, output_name: str) -> None:
    try:
        torch.onnx.export(
            module,
            (example,),
            str(path),
            input_names=[input_name],
            output_names=[output_name],
            dynamic_axes={input_name: {0: "batch"}, output_name: {0: "batch"}},
            opset_version=14,
            dynamo=False,
        )
    except ImportError as exc:
        raise ExportError(f"onnx package required for export: {exc}") from None
    except Exception as exc:
        raise ExportError(f"onnx export failed for {path.name}: {exc}") from None


def default_session_factory(path: Path):
    try:
        import onnxruntime
    except ImportError:
        raise ExportError(
            "onnxruntime required for the self-check; install the 'onnx' extra"
        ) from None
    return onnxruntime.InferenceSession(str(path), providers=["CPUExecutionProvider"])


def _run_session(session, feed: np.ndarray) -> np.ndarray:
    name = session.get_inputs()[0].name
    (out,) = session.run(None, {name: feed})
    return np.asarray(out, dtype=np.float64)


def self_check(out_dir: Path, meta: dict, goldens: dict,
               session_factory: Callable) -> list:
    """Re-run every fixture through the exported models; cosine per fixture."""
    vision = session_factory(out_dir / meta["vision_model"])
    text = session_factory(out_dir / meta["text_model"])
    ctx = meta["context_window"]
    results = []
    for entry in goldens["texts"]:
        padded = np.zeros((1, ctx), dtype=np.int64)
        ids = entry["token_ids"][:ctx]
        padded[0, : len(ids)] = ids
        got = _normalize_rows(_run_session(text, padded))[0]
        ref = np.asarray(entry["embedding"])
        results.append((f"text:{entry['text'][:40]}", float(got @ ref)))
    for entry in goldens["tiles"]:
        with Image.open(out_dir / entry["file"]) as pil:
            tile = np.asarray(pil.convert("RGB"), dtype=np.uint8)
        feed = preprocess_tiles([tile], meta["mean"], meta["std"])
        got = _normalize_rows(_run_session(vision, feed))[0]
        ref = np.asarray(entry["embedding"])
        results.append((f"tile:{entry['file']}", float(got @ ref)))
    return results


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def export(checkpoint: str, out_dir, *, loader: Callable = load_checkpoint,
           exporter: Callable = default_onnx_exporter,
           session_factory: Callable = default_session_factory,
           min_cosine: float = MIN_COSINE) -> dict:
    """Full conversion; returns the manifest dict written as manifest.json."""
    loaded = loader(checkpoint)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "fixtures").mkdir(exist_ok=True)

    vocab_file, merges_file = _save_tokenizer(loaded.tokenizer, out_dir)

    tiles = fixture_tiles(loaded.image_size)
    for i, tile in enumerate(tiles):
        Image.fromarray(tile, mode="RGB").save(out_dir / "fixtures" / f"tile_{i}.png")

    goldens = compute_goldens(loaded, tiles)
    (out_dir / "goldens.json").write_text(json.dumps(goldens))

    example_pixels = torch.from_numpy(
        preprocess_tiles(tiles[:1], loaded.mean, loaded.std)
    )
    example_ids = torch.zeros((1, loaded.context_window), dtype=torch.int64)
    log.info("exporting vision tower")
    exporter(VisionTower(loaded.model), example_pixels, out_dir / "vision.onnx",
             "pixel_values", "image_features")
    log.info("exporting text tower")
    exporter(TextTower(loaded.model), example_ids, out_dir / "text.onnx",
             "input_ids", "text_features")

    meta = {
        "name": loaded.name,
        "dim": loaded.dim,
        "context_window": loaded.context_window,
        "image_size": loaded.image_size,
        "mean": loaded.mean,
        "std": loaded.std,
        "logit_scale_hint": loaded.logit_scale,
        "vision_model": "vision.onnx",
        "text_model": "text.onnx",
        "vocab_file": vocab_file,
        "merges_file": merges_file,
    }
    (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2))

    results = self_check(out_dir, meta, goldens, session_factory)
    worst = min(c for _, c in results)
    if worst < min_cosine:
        bad = [(label, round(c, 6)) for label, c in results if c < min_cosine]
        raise ExportError(
            f"conversion self-check failed (min cosine {worst:.6f} < {min_cosine}): {bad}"
        )

    tracked = ["metadata.json", "goldens.json", "vision.onnx", "text.onnx",
               vocab_file, merges_file]
    tracked += [f"fixtures/tile_{i}.png" for i in range(len(tiles))]
    manifest = {
        "name": loaded.name,
        "checkpoint": checkpoint,
        "dim": loaded.dim,
        "context_window": loaded.context_window,
        "image_size": loaded.image_size,
        "files": {name: _sha256(out_dir / name) for name in tracked},
        "fixtures": {"texts": len(goldens["texts"]), "tiles": len(goldens["tiles"])},
        "self_check": {"threshold": min_cosine, "min_cosine": worst,
                       "results": [[label, c] for label, c in results]},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    log.info("export complete: %s (min self-check cosine %.6f)", out_dir, worst)
    return manifest


def _save_tokenizer(tokenizer, out_dir: Path):
    """Write vocab.json + merges.txt regardless of tokenizer backend."""
    try:
        saved = tokenizer.save_vocabulary(str(out_dir))
    except Exception:
        saved = ()
    names = [Path(p).name for p in saved if p] if saved else []
    vocab = next((n for n in names if n.endswith(".json")), None)
    merges = next((n for n in names if n.endswith(".txt")), None)
    if vocab and merges:
        return vocab, merges
    # tokenizers-backed versions may only emit tokenizer.json; rebuild the
    # plain vocab/merges pair from the in-memory tables, id-ordered so the
    # output is byte-stable across runs
    vocab_map = dict(sorted(tokenizer.get_vocab().items(), key=lambda kv: kv[1]))
    (out_dir / "vocab.json").write_text(json.dumps(vocab_map, ensure_ascii=False))
    merge_lines = _extract_merges(tokenizer)
    if merge_lines is None:
        raise ExportError("cannot recover merges.txt from this tokenizer")
    (out_dir / "merges.txt").write_text("\n".join(["#version: 0.2"] + merge_lines) + "\n")
    return "vocab.json", "merges.txt"


def _extract_merges(tokenizer) -> Optional[list]:
    backend = getattr(tokenizer, "_tokenizer", None) or getattr(tokenizer, "backend_tokenizer", None)
    if backend is None:
        return None
    try:
        blob = json.loads(backend.to_str())
        merges = blob["model"]["merges"]
    except Exception:
        return None
    return [" ".join(m) if isinstance(m, (list, tuple)) else str(m) for m in merges]


def validate_manifest(assets_dir) -> dict:
    """Check the AssetManifest invariant: every listed file exists + hash matches."""
    assets_dir = Path(assets_dir)
    try:
        manifest = json.loads((assets_dir / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ExportError(f"cannot read manifest.json: {exc}") from None
    for name, digest in manifest.get("files", {}).items():
        path = assets_dir / name
        if not path.is_file():
            raise ExportError(f"manifest lists missing file {name}")
        actual = _sha256(path)
        if actual != digest:
            raise ExportError(f"hash mismatch for {name}: {actual} != {digest}")
    return manifest
