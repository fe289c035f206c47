"""Pluggable image codecs with bitrate measurement.

The built-in adapter is baseline JPEG (Pillow). External encoders (HEVC,
VVC, learned codecs, anything with a CLI) are driven by command templates
with {input}/{bitstream}/{output}/{qp}/{width}/{height} placeholders;
binaries are resolved from template paths or environment variables.

bpp is always 8 * bitstream_bytes / (encoded width * encoded height): the
denominator is the raster actually transmitted.
"""

from __future__ import annotations

import io
import os
import shutil
import subprocess
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image as PILImage

from .config import load_config_file
from .errors import CodecError, ConfigError
from .images import Image, save_image

HEVC_BIN_ENV = "SEMFILTER_HEVC_BIN"
HEVC_DEC_ENV = "SEMFILTER_HEVC_DEC_BIN"
VVC_BIN_ENV = "SEMFILTER_VVC_BIN"
VVC_DEC_ENV = "SEMFILTER_VVC_DEC_BIN"


@dataclass(frozen=True)
class EncodeResult:
    bitstream: bytes
    bpp: float
    quality: float
    reconstructed: Image

    def __post_init__(self):
        if self.bpp <= 0:
            raise CodecError(f"bpp must be positive, got {self.bpp}")


class CodecAdapter(ABC):
    name: str = "abstract"
    quality_range: tuple = (0, 0)
    mode: str = "builtin"

    @abstractmethod
    def encode(self, img: Image, quality) -> EncodeResult:
        """Encode, decode back, and measure bits per pixel."""

    def check_quality(self, quality) -> None:
        lo, hi = self.quality_range
        if not lo <= quality <= hi:
            raise CodecError(f"{self.name}: quality {quality} outside [{lo}, {hi}]")


class JpegCodec(CodecAdapter):
    name = "jpeg"
    quality_range = (1, 100)
    mode = "builtin"

    def encode(self, img: Image, quality) -> EncodeResult:
        self.check_quality(quality)
        buf = io.BytesIO()
        # optimized Huffman tables: same baseline bitstream format, smaller headers
        img.to_pil().save(buf, format="JPEG", quality=int(quality), optimize=True)
        bitstream = buf.getvalue()
        buf.seek(0)
        with PILImage.open(buf) as back:
            recon = Image(np.asarray(back.convert("RGB"), dtype=np.uint8))
        if recon.width != img.width or recon.height != img.height:
            raise CodecError("jpeg round-trip changed dimensions")
        return EncodeResult(bitstream, _bpp(bitstream, img), float(quality), recon)


# --- YUV 4:2:0 helpers (BT.601 limited range) -------------------------------

def rgb_to_yuv420(img: Image) -> bytes:
    if img.width % 2 or img.height % 2:
        raise CodecError(f"yuv420 input needs even dimensions, got {img.width}x{img.height}")
    rgb = img.pixels.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 16.0 + 65.481 * r + 128.553 * g + 24.966 * b
    cb = 128.0 - 37.797 * r - 74.203 * g + 112.0 * b
    cr = 128.0 + 112.0 * r - 93.786 * g - 18.214 * b
    cb = cb.reshape(img.height // 2, 2, img.width // 2, 2).mean(axis=(1, 3))
    cr = cr.reshape(img.height // 2, 2, img.width // 2, 2).mean(axis=(1, 3))
    planes = [np.clip(np.rint(p), 0, 255).astype(np.uint8) for p in (y, cb, cr)]
    return b"".join(p.tobytes() for p in planes)


def yuv420_to_rgb(data: bytes, width: int, height: int) -> Image:
    expected = width * height * 3 // 2
    if len(data) < expected:
        raise CodecError(f"yuv420 payload too short: {len(data)} < {expected}")
    raw = np.frombuffer(data[:expected], dtype=np.uint8)
    y = raw[: width * height].reshape(height, width).astype(np.float64)
    half = width * height // 4
    cb = raw[width * height : width * height + half].reshape(height // 2, width // 2)
    cr = raw[width * height + half : expected].reshape(height // 2, width // 2)
    cb = np.repeat(np.repeat(cb, 2, axis=0), 2, axis=1).astype(np.float64)
    cr = np.repeat(np.repeat(cr, 2, axis=0), 2, axis=1).astype(np.float64)
    yp, cbp, crp = 1.164383 * (y - 16.0), cb - 128.0, cr - 128.0
    r = yp + 1.596027 * crp
    g = yp - 0.812968 * crp - 0.391762 * cbp
    b = yp + 2.017232 * cbp
    rgb = np.stack([r, g, b], axis=-1)
    return Image(np.clip(np.rint(rgb), 0, 255).astype(np.uint8))


# --- external process adapter ------------------------------------------------

DEFAULT_TEMPLATES = {
    "hevc": {
        "name": "hevc",
        "bin_env": HEVC_BIN_ENV,
        "decode_bin_env": HEVC_DEC_ENV,
        "quality_range": [0, 51],
        "input_format": "yuv420p",
        "output_format": "yuv420p",
        "encode_args": ["--input", "{input}", "--input-res", "{width}x{height}",
                        "--fps", "25", "--qp", "{qp}", "--output", "{bitstream}"],
        "decode_args": ["-y", "-f", "hevc", "-i", "{bitstream}",
                        "-pix_fmt", "yuv420p", "-f", "rawvideo", "{output}"],
    },
    "vvc": {
        "name": "vvc",
        "bin_env": VVC_BIN_ENV,
        "decode_bin_env": VVC_DEC_ENV,
        "quality_range": [0, 51],
        "input_format": "yuv420p",
        "output_format": "yuv420p",
        "encode_args": ["-i", "{input}", "-s", "{width}x{height}", "--fps", "25",
                        "-q", "{qp}", "-o", "{bitstream}"],
        "decode_args": ["-b", "{bitstream}", "-o", "{output}"],
    },
}


class ExternalCodec(CodecAdapter):
    mode = "external"

    def __init__(self, template: dict):
        try:
            self.name = template["name"]
            self.quality_range = tuple(template.get("quality_range", (0, 51)))
            self._encode_args = list(template["encode_args"])
            self._decode_args = list(template["decode_args"])
        except KeyError as exc:
            raise CodecError(f"codec template missing key {exc}") from None
        self._template = template
        self._input_format = template.get("input_format", "yuv420p")
        self._output_format = template.get("output_format", "yuv420p")
        if self._input_format not in ("yuv420p", "png") or self._output_format not in ("yuv420p", "png"):
            raise CodecError(f"unsupported template formats in codec {self.name}")

    def _resolve_bin(self, key: str, env_key: str) -> str:
        explicit = self._template.get(key)
        env_var = self._template.get(env_key)
        binary = explicit or (os.environ.get(env_var) if env_var else None)
        if not binary:
            hint = f"set {env_var}" if env_var else f"add '{key}' to the codec template"
            raise CodecError(f"{self.name}: encoder binary not configured; {hint}")
        if shutil.which(binary) is None and not Path(binary).is_file():
            hint = f" (from {env_var})" if env_var and not explicit else ""
            raise CodecError(f"{self.name}: binary {binary!r}{hint} not found")
        return binary

    def encode(self, img: Image, quality) -> EncodeResult:
        self.check_quality(quality)
        enc_bin = self._resolve_bin("bin", "bin_env")
        dec_bin = self._template.get("decode_bin") or self._template.get("decode_bin_env")
        dec_bin = self._resolve_bin("decode_bin", "decode_bin_env") if dec_bin else enc_bin
        with tempfile.TemporaryDirectory(prefix="semfilter-codec-") as tmp:
            tmpdir = Path(tmp)
            suffix = ".yuv" if self._input_format == "yuv420p" else ".png"
            input_path = tmpdir / f"input{suffix}"
            bitstream_path = tmpdir / "stream.bin"
            out_suffix = ".yuv" if self._output_format == "yuv420p" else ".png"
            output_path = tmpdir / f"decoded{out_suffix}"
            if self._input_format == "yuv420p":
                input_path.write_bytes(rgb_to_yuv420(img))
            else:
                save_image(img, input_path)
            subst = {
                "input": str(input_path), "bitstream": str(bitstream_path),
                "output": str(output_path), "qp": str(quality),
                "width": str(img.width), "height": str(img.height),
            }
            self._run([enc_bin] + [a.format(**subst) for a in self._encode_args])
            if not bitstream_path.is_file() or bitstream_path.stat().st_size == 0:
                raise CodecError(f"{self.name}: encoder produced no bitstream")
            bitstream = bitstream_path.read_bytes()
            self._run([dec_bin] + [a.format(**subst) for a in self._decode_args])
            if not output_path.is_file():
                raise CodecError(f"{self.name}: decoder produced no output")
            if self._output_format == "yuv420p":
                recon = yuv420_to_rgb(output_path.read_bytes(), img.width, img.height)
            else:
                with PILImage.open(output_path) as pil:
                    recon = Image(np.asarray(pil.convert("RGB"), dtype=np.uint8))
        if recon.width != img.width or recon.height != img.height:
            raise CodecError(
                f"{self.name}: decoded {recon.width}x{recon.height}, expected {img.width}x{img.height}"
            )
        return EncodeResult(bitstream, _bpp(bitstream, img), float(quality), recon)

    def _run(self, cmd: Sequence[str]) -> None:
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=600)
        except OSError as exc:
            raise CodecError(f"{self.name}: cannot run {cmd[0]}: {exc}") from None
        except subprocess.TimeoutExpired:
            raise CodecError(f"{self.name}: {cmd[0]} timed out") from None
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-5:]
            raise CodecError(f"{self.name}: {cmd[0]} exited {proc.returncode}: {' | '.join(tail)}")


def _bpp(bitstream: bytes, img: Image) -> float:
    return 8.0 * len(bitstream) / (img.width * img.height)


def get_codec(name: str, template_path=None) -> CodecAdapter:
    """Build an adapter by name; template files override the shipped defaults."""
    if template_path is not None:
        template = load_config_file(template_path)
        return ExternalCodec(template)
    if name == "jpeg":
        return JpegCodec()
    if name in DEFAULT_TEMPLATES:
        return ExternalCodec(DEFAULT_TEMPLATES[name])
    # a bad name is a configuration problem, not a codec runtime failure
    raise ConfigError(f"unknown codec {name!r}: expected jpeg, hevc, vvc, or a --codec-template file")


def measure_sweep(adapter: CodecAdapter, img: Image, params: Sequence) -> list:
    """One EncodeResult per quality parameter, order preserved."""
    if not params:
        raise CodecError("empty quality parameter list")
    return [adapter.encode(img, p) for p in params]
