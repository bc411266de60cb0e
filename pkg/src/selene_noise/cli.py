"""Command-line entry points.

Exit codes: 0 on success, 2 when an operation's contract is violated
(including bad arguments and configs), 3 when an input file is malformed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .core import (
    ResidualField,
    read_disparity,
    read_raster,
    write_disparity,
    write_raster,
)
from .dataset import export_dataset, extract_patches, split_dataset
from .errors import ContractError, FormatError
from .matcher import MatcherConfig, match_disparity
from .sweep import (
    REPORT_FORMATS,
    SweepConfig,
    render_report,
    run_estimator_eval,
    run_noise_sweep,
)


def _load_config(path: str | None) -> SweepConfig:
    if path is None:
        return SweepConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid config JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return SweepConfig.from_dict(doc)


def _parse_formats(spec: str) -> list[str]:
    formats = [f.strip() for f in spec.split(",") if f.strip()]
    for f in formats:
        if f not in REPORT_FORMATS:
            raise ContractError(
                f"unknown report format {f!r} (choose from {REPORT_FORMATS})"
            )
    if not formats:
        raise ContractError("no report formats requested")
    return formats


def _add_report_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="sweep config JSON file")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument(
        "--formats",
        default="csv,json,svg",
        help="comma-separated subset of csv,json,svg",
    )


def _cmd_sweep(args: argparse.Namespace) -> int:
    formats = _parse_formats(args.formats)
    cfg = _load_config(args.config)
    report = run_noise_sweep(cfg, workers=args.workers)
    written = []
    for fmt in formats:
        written.extend(render_report(report, args.out, fmt))
    for path in written:
        print(path)
    if report.degenerate:
        print("warning: sweep flagged degenerate (matcher invalid fraction "
              "over 20% at some scale)", file=sys.stderr)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    formats = _parse_formats(args.formats)
    cfg = _load_config(args.config)
    overrides = {}
    if args.estimator:
        overrides["estimators"] = tuple(args.estimator)
    if args.sigma is not None:
        overrides["lpf_sigma"] = args.sigma
    if overrides:
        cfg = SweepConfig.from_dict({**_config_dict(cfg), **overrides})
    report = run_estimator_eval(cfg, workers=args.workers)
    written = []
    for fmt in formats:
        written.extend(render_report(report, args.out, fmt))
    for path in written:
        print(path)
    return 0


def _config_dict(cfg: SweepConfig) -> dict:
    return {
        "scales": cfg.scales,
        "terrain": cfg.terrain,
        "table": cfg.table,
        "matcher": cfg.matcher,
        "shift_px": cfg.shift_px,
        "estimators": cfg.estimators,
        "lpf_sigma": cfg.lpf_sigma,
    }


def _cmd_compress(args: argparse.Namespace) -> int:
    img = read_raster(args.input, bit_depth=args.bit_depth)
    from .codec import compress_image, resolve_table

    compressed = compress_image(img, resolve_table(args.table))
    write_raster(compressed, args.output)
    print(args.output)
    return 0


def _cmd_match(args: argparse.Namespace) -> int:
    left = read_raster(args.left, bit_depth=args.bit_depth)
    right = read_raster(args.right, bit_depth=args.bit_depth)
    cfg = MatcherConfig(
        window_half=args.window_half,
        search_center=args.search_center,
        search_half_range=args.search_half_range,
        min_valid_std=args.min_valid_std,
        subpixel=args.subpixel,
    )
    dmap = match_disparity(left, right, cfg)
    write_disparity(dmap, args.output)
    print(args.output)
    return 0


def _cmd_dataset(args: argparse.Namespace) -> int:
    left = read_raster(args.left, bit_depth=args.bit_depth)
    right = read_raster(args.right, bit_depth=args.bit_depth)
    res_map = read_disparity(args.residual)
    residual = ResidualField(res_map.values, res_map.valid)
    patches = extract_patches(
        left, right, residual,
        patch_size=args.patch_size,
        source_id=args.source_id,
    )
    patches = split_dataset(patches, args.train_fraction, args.seed)
    manifest = export_dataset(patches, args.out, overwrite=args.overwrite)
    print(manifest)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selene-noise",
        description=(
            "Characterize and mitigate compression-induced noise in stereo "
            "disparity maps"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sweep = subs.add_parser(
        "sweep", help="run the DN-scale noise sweep and write reports"
    )
    _add_report_args(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    ev = subs.add_parser(
        "eval", help="score residual estimators against the true residual"
    )
    _add_report_args(ev)
    ev.add_argument(
        "--estimator",
        action="append",
        help="none, lpf, or import:<path>; repeatable (overrides config)",
    )
    ev.add_argument("--sigma", type=float, help="Gaussian sigma for lpf")
    ev.set_defaults(func=_cmd_eval)

    comp = subs.add_parser("compress", help="run a raster through the codec")
    comp.add_argument("--input", required=True)
    comp.add_argument("--output", required=True)
    comp.add_argument("--table", default="SF008S_A",
                      help="built-in table name or table file path")
    comp.add_argument("--bit-depth", type=int, default=None)
    comp.set_defaults(func=_cmd_compress)

    match = subs.add_parser("match", help="match a stereo pair to a disparity map")
    match.add_argument("--left", required=True)
    match.add_argument("--right", required=True)
    match.add_argument("--output", required=True)
    match.add_argument("--bit-depth", type=int, default=None)
    match.add_argument("--window-half", type=int, default=7)
    match.add_argument("--search-center", type=int, default=97)
    match.add_argument("--search-half-range", type=int, default=3)
    match.add_argument("--min-valid-std", type=float, default=1e-6)
    match.add_argument("--subpixel", choices=("parabola", "none"),
                       default="parabola")
    match.set_defaults(func=_cmd_match)

    ds = subs.add_parser("dataset", help="export a patch dataset with manifest")
    ds.add_argument("--left", required=True)
    ds.add_argument("--right", required=True)
    ds.add_argument("--residual", required=True,
                    help="residual raster (raw float format)")
    ds.add_argument("--out", required=True)
    ds.add_argument("--bit-depth", type=int, default=None)
    ds.add_argument("--patch-size", type=int, default=256)
    ds.add_argument("--train-fraction", type=float, default=0.9)
    ds.add_argument("--seed", type=int, default=0)
    ds.add_argument("--source-id", default="pair-0")
    ds.add_argument("--overwrite", action="store_true")
    ds.set_defaults(func=_cmd_dataset)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
