"""semfilter: prompt-guided image prefiltering and codec benchmarking."""

__version__ = "0.1.0"

from .bdrate import RateQualityCurve, RateQualityPoint, bd_rate
from .config import PipelineConfig
from .embedding import StubBackend, encode_tiles
from .errors import (
    BackendError,
    CodecError,
    ConfigError,
    ImageIOError,
    SemfilterError,
)
from .gaussian import SigmaGrid, filter_blocks, gaussian_kernel, sigma_map
from .images import Image, load_image, save_image
from .pipeline import PrefilterResult, prefilter_image
from .scoring import ScoreGrid, aggregate_scores, score_tiles, uniform_scores
from .tiling import TileGrid, extract_tiles, resize_to_tile_multiple, select_stride

__all__ = [
    "BackendError",
    "CodecError",
    "ConfigError",
    "Image",
    "ImageIOError",
    "PipelineConfig",
    "PrefilterResult",
    "RateQualityCurve",
    "RateQualityPoint",
    "ScoreGrid",
    "SemfilterError",
    "SigmaGrid",
    "StubBackend",
    "TileGrid",
    "aggregate_scores",
    "bd_rate",
    "encode_tiles",
    "extract_tiles",
    "filter_blocks",
    "gaussian_kernel",
    "load_image",
    "prefilter_image",
    "resize_to_tile_multiple",
    "save_image",
    "score_tiles",
    "select_stride",
    "sigma_map",
    "uniform_scores",
]
