"""Benchmark harness: drives modes x codecs x qualities over a manifest,
measures bpp / fidelity / prefilter latency, assembles rate-quality curves,
and reports BD-rates against an anchor mode.

Modes:
    none                 encode the original image unchanged
    prefilter            full prompt-guided pipeline
    global_gaussian:S    constant sigma S through the same per-block path
    downsample:R         bilinear downscale by R (e.g. 0.5 or 1/3), encode,
                         upsample back before the fidelity measurement

Quality on the curves is external accuracy (joined by run label
"codec/mode/qQ") when a CSV is supplied, otherwise the embedding-cosine
fidelity proxy.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .bdrate import RateQualityCurve, bd_rate
from .codecs import CodecAdapter
from .config import PipelineConfig
from .embedding import EmbeddingBackend, cosine
from .errors import ConfigError, SemfilterError
from .images import Image, load_image, resize_bilinear
from .pipeline import prefilter_image

log = logging.getLogger("semfilter.benchmark")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image: Path
    prompt: str
    answer: Optional[str] = None


def load_manifest(path) -> list:
    """JSONL manifest: {"id", "image", "prompt", "answer"?} per line."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    entries, seen = [], set()
    for ln, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            entry = ManifestEntry(
                id=str(row["id"]),
                image=(path.parent / row["image"]).resolve(),
                prompt=str(row["prompt"]),
                answer=row.get("answer"),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"{path}:{ln}: malformed manifest line: {exc}") from None
        if entry.id in seen:
            raise ConfigError(f"{path}:{ln}: duplicate id {entry.id!r}")
        seen.add(entry.id)
        if not entry.image.is_file():
            raise ConfigError(f"{path}:{ln}: image not found: {entry.image}")
        entries.append(entry)
    if not entries:
        raise ConfigError(f"manifest {path} is empty")
    return entries


@dataclass(frozen=True)
class Mode:
    kind: str  # none | prefilter | global_gaussian | downsample
    param: Optional[float] = None

    @property
    def label(self) -> str:
        if self.param is None:
            return self.kind
        return f"{self.kind}:{self.param:g}"


def parse_mode(text: str) -> Mode:
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind in ("none", "prefilter"):
        if arg:
            raise ConfigError(f"mode {kind!r} takes no parameter")
        return Mode(kind)
    if kind in ("global_gaussian", "downsample"):
        if not arg:
            raise ConfigError(f"mode {kind!r} needs a parameter, e.g. {kind}:0.5")
        try:
            value = float(Fraction(arg.strip()))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad mode parameter {arg!r}") from None
        if kind == "downsample" and not 0 < value < 1:
            raise ConfigError(f"downsample ratio must be in (0, 1), got {value}")
        if kind == "global_gaussian" and value < 0:
            raise ConfigError(f"gaussian sigma must be non-negative, got {value}")
        return Mode(kind, value)
    raise ConfigError(f"unknown mode {text!r}")


def fidelity_proxy(backend: EmbeddingBackend, original: Image, reconstructed: Image,
                   tile_size: int = 224) -> float:
    """Cosine similarity of whole-image embeddings after resizing to tile size."""
    if original.width != reconstructed.width or original.height != reconstructed.height:
        raise ConfigError(
            f"dimension mismatch: {original.width}x{original.height} vs "
            f"{reconstructed.width}x{reconstructed.height}"
        )
    a = backend.encode_image(resize_bilinear(original, tile_size, tile_size))
    b = backend.encode_image(resize_bilinear(reconstructed, tile_size, tile_size))
    return cosine(a, b)


def ingest_accuracy(path) -> dict:
    """CSV "label,accuracy" -> {label: accuracy}; duplicate labels are an error."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:2]] != ["label", "accuracy"]:
                raise ConfigError(f"{path}: expected header 'label,accuracy', got {header}")
            out = {}
            for ln, row in enumerate(reader, 2):
                if not row or not "".join(row).strip():
                    continue
                if len(row) < 2:
                    raise ConfigError(f"{path}:{ln}: expected 2 columns, got {row}")
                label = row[0].strip()
                if label in out:
                    raise ConfigError(f"{path}:{ln}: duplicate label {label!r}")
                try:
                    out[label] = float(row[1])
                except ValueError:
                    raise ConfigError(f"{path}:{ln}: bad accuracy value {row[1]!r}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read accuracy CSV {path}: {exc}") from None
    return out


def run_label(codec: str, mode: Mode, quality) -> str:
    return f"{codec}/{mode.label}/q{quality:g}"


def _mode_image(original: Image, mode: Mode, config: PipelineConfig,
                backend: Optional[EmbeddingBackend], prompt: str):
    """Returns (image to encode, prefilter latency ms or None)."""
    if mode.kind == "none":
        return original, None
    if mode.kind == "prefilter":
        res = prefilter_image(original, prompt, config, backend)
        return res.image, res.latency_ms
    if mode.kind == "global_gaussian":
        res = prefilter_image(original, None, config, None, uniform_sigma=mode.param)
        return res.image, res.latency_ms
    if mode.kind == "downsample":
        w = max(1, round(original.width * mode.param))
        h = max(1, round(original.height * mode.param))
        return resize_bilinear(original, w, h), None
    raise ConfigError(f"unknown mode kind {mode.kind!r}")


def _entry_records(entry: ManifestEntry, modes: Sequence[Mode], codecs: Sequence[CodecAdapter],
                   qualities: Mapping[str, Sequence], config: PipelineConfig,
                   backend: EmbeddingBackend, accuracy: Optional[Mapping[str, float]],
                   bitstream_dir: Optional[Path]) -> list:
    records = []
    try:
        original = load_image(entry.image)
    except SemfilterError as exc:
        return [{"id": entry.id, "error": str(exc)}]
    for mode in modes:
        try:
            encoded_input, latency_ms = _mode_image(original, mode, config, backend, entry.prompt)
        except SemfilterError as exc:
            records.append({"id": entry.id, "mode": mode.label, "error": str(exc)})
            continue
        for codec in codecs:
            for q in qualities[codec.name]:
                label = run_label(codec.name, mode, q)
                try:
                    result = codec.encode(encoded_input, q)
                    recon = result.reconstructed
                    if recon.width != original.width or recon.height != original.height:
                        recon = resize_bilinear(recon, original.width, original.height)
                    fidelity = fidelity_proxy(backend, original, recon, config.tile_size)
                except SemfilterError as exc:
                    records.append({"id": entry.id, "mode": mode.label,
                                    "codec": codec.name, "quality": q, "error": str(exc)})
                    continue
                if bitstream_dir is not None:
                    name = f"{entry.id}_{label.replace('/', '_').replace(':', '_')}.bin"
                    (bitstream_dir / name).write_bytes(result.bitstream)
                metric = accuracy.get(label) if accuracy else None
                records.append({
                    "id": entry.id, "mode": mode.label, "codec": codec.name,
                    "quality": q, "label": label, "bpp": result.bpp,
                    "fidelity": fidelity,
                    "metric": metric if metric is not None else fidelity,
                    "metric_source": "accuracy" if metric is not None else "proxy",
                    "latency_ms": latency_ms,
                    "width": encoded_input.width, "height": encoded_input.height,
                })
    return records


def _normalize_qualities(codecs: Sequence[CodecAdapter], qualities) -> dict:
    if isinstance(qualities, Mapping):
        table = {name: list(vals) for name, vals in qualities.items()}
    else:
        table = {c.name: list(qualities) for c in codecs}
    for codec in codecs:
        if not table.get(codec.name):
            raise ConfigError(f"no quality list for codec {codec.name!r}")
    return table


def assemble_curves(records: Sequence[dict]) -> dict:
    """Mean bpp/metric per (codec, mode, quality), as bpp-sorted point lists."""
    groups = {}
    for rec in records:
        if "error" in rec:
            continue
        key = (rec["codec"], rec["mode"])
        groups.setdefault(key, {}).setdefault(rec["quality"], []).append(rec)
    curves = {}
    for (codec, mode), by_q in sorted(groups.items()):
        points = []
        for q, rows in by_q.items():
            rows = sorted(rows, key=lambda r: r["id"])
            points.append({
                "quality_param": q,
                "bpp": float(np.mean([r["bpp"] for r in rows])),
                "metric": float(np.mean([r["metric"] for r in rows])),
                "entries": len(rows),
            })
        points.sort(key=lambda p: p["bpp"])
        curves.setdefault(codec, {})[mode] = points
    return curves


def _curve_obj(codec: str, mode: str, points: Sequence[dict]) -> RateQualityCurve:
    return RateQualityCurve.from_pairs(f"{codec}/{mode}", [(p["bpp"], p["metric"]) for p in points])


def run_benchmark(entries: Sequence[ManifestEntry], config: PipelineConfig,
                  backend: EmbeddingBackend, codecs: Sequence[CodecAdapter],
                  qualities, modes: Sequence[Mode], out_dir,
                  anchor_mode: str = "none", workers: int = 1,
                  accuracy: Optional[Mapping[str, float]] = None,
                  keep_bitstreams: bool = False) -> dict:
    """Run the full sweep, write results.jsonl/.csv and summary.json, and
    return the summary dict."""
    if not entries:
        raise ConfigError("manifest is empty")
    if not modes:
        raise ConfigError("no modes selected")
    if not codecs:
        raise ConfigError("no codecs selected")
    quality_table = _normalize_qualities(codecs, qualities)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bitstream_dir = None
    if keep_bitstreams:
        bitstream_dir = out_dir / "bitstreams"
        bitstream_dir.mkdir(exist_ok=True)

    def job(entry):
        return _entry_records(entry, modes, codecs, quality_table, config, backend,
                              accuracy, bitstream_dir)

    records = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(job, entries):
                records.extend(chunk)
    else:
        for entry in entries:
            records.extend(job(entry))
    records.sort(key=lambda r: (r["id"], r.get("mode", ""), r.get("codec", ""),
                                str(r.get("quality", ""))))

    with open(out_dir / "results.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    _write_csv(out_dir / "results.csv", records)

    curves = assemble_curves(records)
    bd_table = {}
    for codec, by_mode in curves.items():
        anchor_points = by_mode.get(anchor_mode)
        bd_table[codec] = {}
        for mode, points in by_mode.items():
            if mode == anchor_mode:
                continue
            if anchor_points is None:
                bd_table[codec][mode] = {"error": f"anchor mode {anchor_mode!r} missing"}
                continue
            try:
                value = bd_rate(_curve_obj(codec, anchor_mode, anchor_points),
                                _curve_obj(codec, mode, points))
                bd_table[codec][mode] = value
            except SemfilterError as exc:
                bd_table[codec][mode] = {"error": str(exc)}

    unmatched = sorted(set(accuracy) - {r.get("label") for r in records}) if accuracy else []
    if unmatched:
        log.warning("accuracy labels with no matching runs: %s", ", ".join(unmatched))
    errors = [r for r in records if "error" in r]
    summary = {
        "entries": len(entries),
        "records": len(records),
        "errors": len(errors),
        "anchor_mode": anchor_mode,
        "metric_source": "accuracy" if accuracy else "proxy",
        "unmatched_accuracy_labels": unmatched,
        "curves": curves,
        "bd_rate_pct": bd_table,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def _write_csv(path: Path, records: Sequence[dict]) -> None:
    columns = ["id", "mode", "codec", "quality", "label", "bpp", "fidelity", "metric",
               "metric_source", "latency_ms", "width", "height", "error"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow(rec)


@dataclass(frozen=True)
class LatencyStats:
    count: int
    mean_ms: float
    ci_low: float
    ci_high: float


def bench_latency(config: PipelineConfig, backend: EmbeddingBackend,
                  images: Sequence[Image], prompt: str = "describe the scene") -> LatencyStats:
    """Mean prefilter-stage latency with a normal-approximation 95% CI."""
    if len(images) < 30:
        raise ConfigError(f"latency benchmark needs >= 30 images, got {len(images)}")
    samples = [prefilter_image(img, prompt, config, backend).latency_ms for img in images]
    mean = float(np.mean(samples))
    half = 1.96 * float(np.std(samples, ddof=1)) / math.sqrt(len(samples))
    return LatencyStats(len(samples), mean, mean - half, mean + half)


def plot_summary(summary: Mapping, out_path) -> None:
    """Rate-quality chart per codec, written as SVG."""
    import matplotlib  # noqa: PLC0415 - pulled in only for the plot command

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt  # noqa: PLC0415

    curves = summary.get("curves", {})
    if not curves:
        raise ConfigError("summary has no curves to plot")
    fig, axes = plt.subplots(1, len(curves), figsize=(6 * len(curves), 4.5), squeeze=False)
    for ax, (codec, by_mode) in zip(axes[0], sorted(curves.items())):
        for mode, points in sorted(by_mode.items()):
            bpps = [p["bpp"] for p in points]
            metrics = [p["metric"] for p in points]
            ax.plot(bpps, metrics, marker="o", label=mode)
        ax.set_title(codec)
        ax.set_xlabel("bpp")
        ax.set_ylabel(summary.get("metric_source", "metric"))
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
