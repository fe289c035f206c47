"""End-to-end prefiltering: resize, tile, score, sigma-map, smooth.

The same code path serves the full prompt-guided mode, the uniform-score
ablation (use_scoring=False), and the constant-sigma global baselines
(uniform_sigma=...), so outputs are byte-identical whenever the sigma
fields coincide.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .config import PipelineConfig
from .embedding import EmbeddingBackend, encode_tiles
from .errors import ConfigError
from .gaussian import SigmaGrid, filter_blocks, sigma_map, uniform_sigmas
from .images import Image
from .prompt import DEFAULT_TABLES, PromptTables, condense
from .scoring import ScoreGrid, aggregate_scores, score_tiles, uniform_scores
from .tiling import TileGrid, extract_tiles, plan_grid, resize_to_tile_multiple


@dataclass(frozen=True)
class PrefilterResult:
    image: Image
    grid: TileGrid
    scores: ScoreGrid
    sigmas: SigmaGrid
    clip_text: Optional[str]  # text actually embedded; None on uniform paths
    latency_ms: float


def prefilter_image(img: Image, prompt: Optional[str], config: PipelineConfig,
                    backend: Optional[EmbeddingBackend] = None,
                    uniform_sigma: Optional[float] = None,
                    instruction_phrases=None,
                    prompt_tables: PromptTables = DEFAULT_TABLES) -> PrefilterResult:
    """Run the prefiltering stage and return the smoothed image + diagnostics.

    uniform_sigma overrides scoring entirely and filters every block with the
    given constant (the global-Gaussian baseline path). Otherwise scoring
    follows config.use_scoring, which requires a backend and a prompt.
    instruction_phrases/prompt_tables override the embedded preprocessing
    tables.
    """
    start = time.perf_counter()
    resized = resize_to_tile_multiple(img, config.tile_size)
    grid = plan_grid(resized, config.tile_size, config.tile_num, config.allow_overlap)

    clip_text = None
    if uniform_sigma is not None:
        scores = uniform_scores(grid)
        sigmas = uniform_sigmas(grid.cells_x, grid.cells_y, grid.stride, uniform_sigma)
    elif not config.use_scoring:
        scores = uniform_scores(grid)
        sigmas = sigma_map(scores, config.sigma_one, config.sigma_max)
    else:
        if backend is None:
            raise ConfigError("scoring requires an embedding backend")
        if prompt is None or not prompt.strip():
            raise ConfigError("scoring requires a non-empty prompt (use --no-scoring for the uniform path)")
        clip_text = (
            condense(prompt, config.context_window, backend.count_tokens,
                     phrases=instruction_phrases, tables=prompt_tables)
            if config.preprocess_prompt
            else prompt
        )
        tiles = extract_tiles(resized, grid)
        text_emb = backend.encode_text(clip_text)
        tile_embs = encode_tiles(backend, tiles)
        raw = score_tiles(text_emb, tile_embs, config.logit_scale)
        scores = aggregate_scores(grid, raw)
        sigmas = sigma_map(scores, config.sigma_one, config.sigma_max)

    filtered = filter_blocks(resized, sigmas, config.kernel_size)
    latency_ms = (time.perf_counter() - start) * 1000.0
    return PrefilterResult(filtered, grid, scores, sigmas, clip_text, latency_ms)
