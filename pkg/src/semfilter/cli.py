"""Command-line interface.

Subcommands: filter, encode, bench, bdrate, latency, plot, export-assets.
Logs go to stderr; machine-readable results go to stdout or files. Exit
codes: 2 config/usage, 3 image IO, 4 backend, 5 codec.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .benchmark import (
    bench_latency,
    fidelity_proxy,
    ingest_accuracy,
    load_manifest,
    parse_mode,
    plot_summary,
    run_benchmark,
)
from .bdrate import RateQualityCurve, bd_rate
from .codecs import get_codec
from .config import PipelineConfig, load_config_file
from .embedding import StubBackend
from .errors import ConfigError, SemfilterError
from .gaussian import dump_sigma_grid
from .images import load_image, save_image
from .pipeline import prefilter_image
from .scoring import dump_score_grid

log = logging.getLogger("semfilter")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML/JSON config file with a [pipeline] section")
    p.add_argument("--backend", choices=["stub", "neural"], default="stub")
    p.add_argument("--model-dir", help="neural backend assets directory (default $SEMFILTER_MODEL_DIR)")
    p.add_argument("--tile-size", type=int, dest="tile_size")
    p.add_argument("--tile-num", type=int, dest="tile_num")
    p.add_argument("--logit-scale", type=float, dest="logit_scale")
    p.add_argument("--sigma-one", type=float, dest="sigma_one")
    p.add_argument("--sigma-max", type=float, dest="sigma_max")
    p.add_argument("--kernel-size", type=int, dest="kernel_size")
    p.add_argument("--context-window", type=int, dest="context_window")
    p.add_argument("--no-scoring", action="store_true", help="uniform scores (scoring ablation)")
    p.add_argument("--no-overlap", action="store_true", help="always use stride = tile_size")
    p.add_argument("--no-preprocess", action="store_true", help="skip prompt preprocessing")
    p.add_argument("--blacklist-file", help="instruction-phrase blacklist (one per line)")
    p.add_argument("--stopwords-file", help="stop-word list override (one word per line)")
    p.add_argument("--lemma-file", help="lemma exception table override ('surface lemma' lines)")
    p.add_argument("--pos-file", help="POS lexicon override ('word NOUN|ADJ|VERB|OTHER' lines)")


def _build_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if args.config:
        data = load_config_file(args.config)
        section = data.get("pipeline", data)
        config = PipelineConfig.from_mapping(section)
    config = config.with_overrides(
        tile_size=args.tile_size, tile_num=args.tile_num, logit_scale=args.logit_scale,
        sigma_one=args.sigma_one, sigma_max=args.sigma_max, kernel_size=args.kernel_size,
        context_window=args.context_window,
    )
    if args.no_scoring:
        config = config.with_overrides(use_scoring=False)
    if args.no_overlap:
        config = config.with_overrides(allow_overlap=False)
    if args.no_preprocess:
        config = config.with_overrides(preprocess_prompt=False)
    return config


def _build_backend(args, config):
    if args.backend == "neural":
        from .neural import NeuralBackend  # noqa: PLC0415 - keep stub path import-light

        return NeuralBackend(args.model_dir, batch_size=config.batch_size)
    return StubBackend()


def _build_prompt_overrides(args):
    from .prompt import (  # noqa: PLC0415
        DEFAULT_TABLES,
        PromptTables,
        load_lemma_table,
        load_phrase_file,
        load_pos_table,
        load_word_list,
    )

    phrases = load_phrase_file(args.blacklist_file) if args.blacklist_file else None
    if not (args.stopwords_file or args.lemma_file or args.pos_file):
        return phrases, DEFAULT_TABLES
    tables = PromptTables(
        stop_words=load_word_list(args.stopwords_file) if args.stopwords_file else None,
        exceptions=load_lemma_table(args.lemma_file) if args.lemma_file else None,
        lexicon=load_pos_table(args.pos_file) if args.pos_file else None,
    )
    return phrases, tables


def cmd_filter(args) -> int:
    config = _build_config(args)
    backend = _build_backend(args, config) if config.use_scoring else None
    phrases, tables = _build_prompt_overrides(args)
    img = load_image(args.image)
    result = prefilter_image(img, args.prompt, config, backend,
                             instruction_phrases=phrases, prompt_tables=tables)
    save_image(result.image, args.out)
    if args.dump_scores:
        dump_score_grid(result.scores, args.dump_scores)
    if args.dump_sigma:
        dump_sigma_grid(result.sigmas, Path(args.dump_sigma).with_suffix(".png"), config.sigma_max)
    log.info("filtered %s -> %s (stride %d, %d tiles, %.1f ms)",
             args.image, args.out, result.grid.stride, result.grid.count, result.latency_ms)
    return 0


def cmd_encode(args) -> int:
    config = _build_config(args)
    backend = _build_backend(args, config) if config.use_scoring else None
    phrases, tables = _build_prompt_overrides(args)
    img = load_image(args.image)
    if args.no_prefilter:
        encoded_input = img
        latency_ms = None
    else:
        result = prefilter_image(img, args.prompt, config, backend,
                                 instruction_phrases=phrases, prompt_tables=tables)
        encoded_input = result.image
        latency_ms = result.latency_ms
    codec = get_codec(args.codec, args.codec_template)
    enc = codec.encode(encoded_input, args.q)
    if args.out:
        save_image(enc.reconstructed, args.out)
    if args.bitstream:
        Path(args.bitstream).parent.mkdir(parents=True, exist_ok=True)
        Path(args.bitstream).write_bytes(enc.bitstream)
    payload = {
        "codec": codec.name, "quality": enc.quality, "bpp": enc.bpp,
        "bytes": len(enc.bitstream), "width": encoded_input.width,
        "height": encoded_input.height, "prefilter_latency_ms": latency_ms,
    }
    if backend is not None and not args.no_prefilter:
        recon = enc.reconstructed
        payload["fidelity_proxy"] = fidelity_proxy(
            backend, encoded_input, recon, config.tile_size
        )
    print(json.dumps(payload))
    return 0


def cmd_bench(args) -> int:
    config = _build_config(args)
    backend = _build_backend(args, config)
    entries = load_manifest(args.manifest)
    codecs = []
    for name in args.codecs.split(","):
        name = name.strip()
        if not name:
            continue
        # the template applies to external codecs only; jpeg stays built-in
        template = args.codec_template if name != "jpeg" else None
        codecs.append(get_codec(name, template))
    qualities = [float(q) if "." in q else int(q) for q in args.qualities.split(",") if q.strip()]
    modes = [parse_mode(m) for m in args.modes.split(",") if m.strip()]
    accuracy = ingest_accuracy(args.accuracy_csv) if args.accuracy_csv else None
    summary = run_benchmark(
        entries, config, backend, codecs, qualities, modes, args.out_dir,
        anchor_mode=args.anchor, workers=args.workers, accuracy=accuracy,
        keep_bitstreams=args.keep_bitstreams,
    )
    print(json.dumps({"out_dir": str(args.out_dir), "bd_rate_pct": summary["bd_rate_pct"],
                      "records": summary["records"], "errors": summary["errors"]}, indent=2))
    return 0


def _load_curve_csv(path, label) -> RateQualityCurve:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:2]] != ["bpp", "quality"]:
                raise ConfigError(f"{path}: expected header 'bpp,quality', got {header}")
            pairs = [(float(r[0]), float(r[1])) for r in reader if r and "".join(r).strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read curve CSV {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: bad numeric value: {exc}") from None
    return RateQualityCurve.from_pairs(label, pairs)


def cmd_bdrate(args) -> int:
    anchor = _load_curve_csv(args.anchor_csv, "anchor")
    test = _load_curve_csv(args.test_csv, "test")
    value = bd_rate(anchor, test, method=args.method)
    print(json.dumps({"bd_rate_pct": value, "method": args.method}))
    return 0


def cmd_latency(args) -> int:
    config = _build_config(args)
    backend = _build_backend(args, config)
    entries = load_manifest(args.manifest)
    images = [load_image(e.image) for e in entries]
    prompts = entries[0].prompt if entries else "describe the scene"
    stats = bench_latency(config, backend, images, prompts)
    print(json.dumps({"count": stats.count, "mean_ms": stats.mean_ms,
                      "ci95_low_ms": stats.ci_low, "ci95_high_ms": stats.ci_high}))
    return 0


def cmd_plot(args) -> int:
    try:
        summary = json.loads(Path(args.summary).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read summary {args.summary}: {exc}") from None
    plot_summary(summary, args.out)
    log.info("wrote %s", args.out)
    return 0


def cmd_export_assets(args) -> int:
    try:
        from semfilter_export.cli import main as export_main  # noqa: PLC0415
    except ImportError:
        raise ConfigError(
            "the model export tool is a separate package; install it from the "
            "model_export/ directory (pip install ./model_export)"
        ) from None
    return export_main(["--model", args.model, "--out", args.out] + (args.extra or []))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semfilter",
        description="Prompt-guided image prefiltering and codec benchmarking",
    )
    parser.add_argument("--version", action="version", version=f"semfilter {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="prefilter one image for a prompt", parents=[common])
    p.add_argument("--image", required=True)
    p.add_argument("--prompt", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-scores", help="write PREFIX.png + PREFIX.json score heatmap")
    p.add_argument("--dump-sigma", help="write sigma heatmap PNG")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("encode", help="prefilter + encode, print bpp JSON", parents=[common])
    p.add_argument("--image", required=True)
    p.add_argument("--prompt", default=None)
    p.add_argument("--codec", required=True)
    p.add_argument("--codec-template", help="TOML/JSON external codec template")
    p.add_argument("--q", required=True, type=float)
    p.add_argument("--out", help="write the reconstruction PNG here")
    p.add_argument("--bitstream", help="write the raw bitstream here")
    p.add_argument("--no-prefilter", action="store_true", help="encode the original image")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("bench", help="manifest sweep with curves and BD-rates", parents=[common])
    p.add_argument("--manifest", required=True)
    p.add_argument("--codecs", default="jpeg", help="comma list: jpeg,hevc,vvc")
    p.add_argument("--codec-template", help="template file applied to every non-jpeg codec")
    p.add_argument("--qualities", required=True, help="comma list, e.g. 10,30,50,70,90")
    p.add_argument("--modes", default="none,prefilter",
                   help="comma list: none,prefilter,global_gaussian:0.2,downsample:1/2")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--anchor", default="none", help="anchor mode for BD-rate")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--accuracy-csv", help="join external accuracies (label,accuracy)")
    p.add_argument("--keep-bitstreams", action="store_true")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bdrate", help="BD-rate between two curve CSVs (bpp,quality)", parents=[common])
    p.add_argument("--anchor-csv", required=True)
    p.add_argument("--test-csv", required=True)
    p.add_argument("--method", choices=["pchip", "cubic"], default="pchip")
    p.set_defaults(func=cmd_bdrate)

    p = sub.add_parser("latency", help="prefilter latency over a manifest (>= 30 images)", parents=[common])
    p.add_argument("--manifest", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("plot", help="SVG rate-quality chart from a bench summary.json", parents=[common])
    p.add_argument("--summary", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("export-assets", help="delegate to the model export tool if installed", parents=[common])
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("extra", nargs="*")
    p.set_defaults(func=cmd_export_assets)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SemfilterError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
