"""End-to-end experiment orchestration and report rendering.

Two experiment drivers share one report container:

* :func:`run_noise_sweep` measures how disparity error grows as scene DN is
  scaled down: per scale it synthesizes terrain, builds a known-disparity
  stereo pair, compresses it, matches both the compressed and uncompressed
  pairs, and records residual statistics against the constant truth.
* :func:`run_estimator_eval` scores residual estimators against the "true"
  residual, defined as compressed-pair disparity minus uncompressed-pair
  disparity, per pair and pooled over all pairs.

Per-scale seeds are spawned from the master seed with a splittable counter,
so appending scales never changes existing rows. Scales are independent work
units; report assembly is single-threaded and ordered, so output is
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .codec import QuantTable, compress_image, resolve_table
from .core import DisparityMap, SummaryStats
from .denoiser import (
    ElevationModel,
    import_residual_estimate,
    lpf_residual_estimate,
    null_residual_estimate,
)
from .errors import ContractError
from .matcher import MatcherConfig, match_disparity
from .residual import AgreementMetrics, agreement_from_arrays, disparity_residual
from .synth import TerrainParams, generate_terrain, make_shifted_pair, scale_dn

DEFAULT_SCALES = (1.0, 0.75, 0.5, 0.25, 0.1, 0.05)
_DEGENERATE_INVALID_FRACTION = 0.20
_SCATTER_MAX_POINTS = 50_000

REPORT_FORMATS = ("csv", "json", "svg")

NOISE_CSV_COLUMNS = (
    "scale,image_mean_dn,image_std_dn,"
    "compressed_min_px,compressed_max_px,compressed_mean_px,compressed_std_px,"
    "uncompressed_min_px,uncompressed_max_px,uncompressed_mean_px,"
    "uncompressed_std_px,"
    "compressed_min_m,compressed_max_m,compressed_mean_m,compressed_std_m,"
    "uncompressed_min_m,uncompressed_max_m,uncompressed_mean_m,"
    "uncompressed_std_m,"
    "invalid_fraction,degenerate"
)
METHODS_CSV_COLUMNS = "id,method,mean,sd,r,r2"
OVERALL_CSV_COLUMNS = "method,mean,sd,r,r2,count"


@dataclass(frozen=True)
class SweepConfig:
    scales: tuple[float, ...] = DEFAULT_SCALES
    terrain: TerrainParams = TerrainParams(width=512, height=512)
    table: str | QuantTable = "SF008S_A"
    matcher: MatcherConfig = MatcherConfig()
    shift_px: int = 97
    estimators: tuple[str, ...] = ("none", "lpf")
    lpf_sigma: float = 3.0

    def __post_init__(self):
        if not self.scales:
            raise ContractError("scales must be non-empty")
        for s in self.scales:
            if not (0.0 < s <= 1.0):
                raise ContractError(f"scales must lie in (0, 1], got {s}")
        if self.shift_px < 0:
            raise ContractError(f"shift_px must be >= 0, got {self.shift_px}")
        if self.lpf_sigma <= 0:
            raise ContractError(f"lpf_sigma must be > 0, got {self.lpf_sigma}")
        for sel in self.estimators:
            _check_estimator(sel)
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "estimators", tuple(self.estimators))

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        if "terrain" in d and isinstance(d["terrain"], dict):
            d["terrain"] = TerrainParams.from_dict(d["terrain"])
        if "matcher" in d and isinstance(d["matcher"], dict):
            d["matcher"] = MatcherConfig.from_dict(d["matcher"])
        for key in ("scales", "estimators"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ContractError(f"bad sweep config: {exc}") from exc


def _check_estimator(sel: str) -> None:
    if sel in ("none", "lpf") or sel.startswith("import:"):
        return
    raise ContractError(
        f"unknown estimator {sel!r} (use none, lpf, or import:<path>)"
    )


@dataclass(frozen=True)
class NoiseRow:
    """One DN scale of the noise sweep; residual statistics are in pixels."""

    scale: float
    image_mean_dn: float
    image_std_dn: float
    compressed: SummaryStats
    uncompressed: SummaryStats
    invalid_fraction: float  # worst matcher failure rate over the feasible interior
    degenerate: bool


@dataclass(frozen=True)
class MethodRow:
    pair_id: str
    method: str
    metrics: AgreementMetrics


@dataclass(frozen=True)
class OverallRow:
    method: str
    metrics: AgreementMetrics
    count: int


@dataclass(frozen=True)
class ProfileSample:
    """One image column of disparity for the profile figure."""

    pair_id: str
    column: int
    compressed: np.ndarray  # NaN where invalid
    uncompressed: np.ndarray


@dataclass(frozen=True)
class ScatterSample:
    """Pooled (truth, estimate) values, subsampled for the scatter figure."""

    method: str
    truth: np.ndarray
    estimate: np.ndarray


@dataclass(frozen=True)
class EvalReport:
    noise_rows: tuple[NoiseRow, ...] = ()
    method_rows: tuple[MethodRow, ...] = ()
    overall_rows: tuple[OverallRow, ...] = ()
    profile: ProfileSample | None = None
    scatters: tuple[ScatterSample, ...] = ()
    elevation: ElevationModel = ElevationModel()

    @property
    def degenerate(self) -> bool:
        return any(row.degenerate for row in self.noise_rows)


def _scale_seed(master: int, index: int) -> int:
    """Splittable per-scale seed: child ``index`` of the master sequence."""
    seq = np.random.SeedSequence(master, spawn_key=(index,))
    return int(seq.generate_state(1, np.uint64)[0])


def _interior_count(height: int, width: int, cfg: MatcherConfig) -> int:
    """Pixels whose windows fit the image for the whole search range."""
    r = cfg.window_half
    dmin = cfg.search_center - cfg.search_half_range
    dmax = cfg.search_center + cfg.search_half_range
    row_lo = max(r, r - dmin)
    row_hi = min(height - 1 - r, height - 1 - r - dmax)
    rows = max(0, row_hi - row_lo + 1)
    cols = max(0, width - 2 * r)
    return rows * cols


def _interior_invalid_fraction(dmap: DisparityMap, cfg: MatcherConfig) -> float:
    interior = _interior_count(dmap.height, dmap.width, cfg)
    if interior == 0:
        return 1.0
    return 1.0 - float(dmap.valid.sum()) / interior


def _scale_pair(cfg: SweepConfig, index: int, scale: float):
    """Generate, compress, and match one scale's stereo pair."""
    params = replace(cfg.terrain, seed=_scale_seed(cfg.terrain.seed, index))
    terrain = generate_terrain(params)
    scaled = scale_dn(terrain, scale)
    left, right, truth = make_shifted_pair(scaled, cfg.shift_px)
    table = resolve_table(cfg.table)
    d_unc = match_disparity(left, right, cfg.matcher)
    d_comp = match_disparity(
        compress_image(left, table), compress_image(right, table), cfg.matcher
    )
    return scaled, truth, d_comp, d_unc


def _noise_row(cfg: SweepConfig, index: int, scale: float
               ) -> tuple[NoiseRow, ProfileSample]:
    scaled, truth, d_comp, d_unc = _scale_pair(cfg, index, scale)
    res_comp = disparity_residual(d_comp, truth)
    res_unc = disparity_residual(d_unc, truth)
    invalid = max(
        _interior_invalid_fraction(d_comp, cfg.matcher),
        _interior_invalid_fraction(d_unc, cfg.matcher),
    )
    row = NoiseRow(
        scale=scale,
        image_mean_dn=float(scaled.pixels.mean()),
        image_std_dn=float(scaled.pixels.std()),
        compressed=res_comp.stats,
        uncompressed=res_unc.stats,
        invalid_fraction=invalid,
        degenerate=invalid > _DEGENERATE_INVALID_FRACTION,
    )
    column = d_comp.width // 2
    profile = ProfileSample(
        pair_id=_pair_id(scale),
        column=column,
        compressed=np.where(
            d_comp.valid[:, column], d_comp.values[:, column], np.nan
        ),
        uncompressed=np.where(
            d_unc.valid[:, column], d_unc.values[:, column], np.nan
        ),
    )
    return row, profile


def _pair_id(scale: float) -> str:
    return f"scale-{scale:g}"


def _run_indexed(cfg: SweepConfig, worker, workers: int) -> list:
    """Run ``worker(index, scale)`` per scale, preserving input order."""
    if workers < 1:
        raise ContractError(f"workers must be >= 1, got {workers}")
    jobs = list(enumerate(cfg.scales))
    if workers == 1:
        return [worker(i, s) for i, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, i, s) for i, s in jobs]
        return [f.result() for f in futures]


def run_noise_sweep(cfg: SweepConfig, workers: int = 1) -> EvalReport:
    """Noise statistics per DN scale; rows are ordered ascending by scale."""
    results = _run_indexed(
        cfg, lambda i, s: _noise_row(cfg, i, s), workers
    )
    order = sorted(range(len(results)), key=lambda i: cfg.scales[i])
    rows = tuple(results[i][0] for i in order)
    profile = results[order[0]][1]  # darkest scale is the interesting one
    return EvalReport(noise_rows=rows, profile=profile)


def _make_estimate(sel: str, d_comp: DisparityMap, cfg: SweepConfig,
                   pair_id: str):
    if sel == "none":
        return null_residual_estimate(d_comp)
    if sel == "lpf":
        return lpf_residual_estimate(d_comp, cfg.lpf_sigma)
    path = sel[len("import:"):]
    est = import_residual_estimate(path)
    if est.values.shape != d_comp.values.shape:
        raise ContractError(
            f"pair {pair_id}: imported estimate {path} has shape "
            f"{est.values.shape}, expected {d_comp.values.shape}"
        )
    return est


def _eval_scale(cfg: SweepConfig, index: int, scale: float):
    """Per-pair agreement rows plus raw (estimate, truth) vectors for pooling."""
    _, _, d_comp, d_unc = _scale_pair(cfg, index, scale)
    pair_id = _pair_id(scale)
    truth_res = disparity_residual(d_comp, d_unc)
    rows = []
    pooled = {}
    for sel in cfg.estimators:
        est = _make_estimate(sel, d_comp, cfg, pair_id)
        joint = est.valid & truth_res.valid
        metrics = agreement_from_arrays(
            est.values[joint], truth_res.values[joint]
        )
        rows.append(MethodRow(pair_id=pair_id, method=sel, metrics=metrics))
        pooled[sel] = (est.values[joint], truth_res.values[joint])
    return rows, pooled


def _subsample(a: np.ndarray, limit: int) -> np.ndarray:
    if a.size <= limit:
        return a
    idx = np.linspace(0, a.size - 1, limit).astype(np.int64)
    return a[idx]


def run_estimator_eval(cfg: SweepConfig, workers: int = 1) -> EvalReport:
    """Score every configured estimator per pair and pooled over all pairs."""
    if not cfg.estimators:
        raise ContractError("estimator evaluation needs at least one estimator")
    results = _run_indexed(
        cfg, lambda i, s: _eval_scale(cfg, i, s), workers
    )
    method_rows = tuple(row for rows, _ in results for row in rows)
    overall = []
    scatters = []
    for sel in cfg.estimators:
        est = np.concatenate([pooled[sel][0] for _, pooled in results])
        truth = np.concatenate([pooled[sel][1] for _, pooled in results])
        metrics = agreement_from_arrays(est, truth)
        overall.append(OverallRow(method=sel, metrics=metrics, count=est.size))
        if sel != "none":  # a constant-zero scatter carries no information
            scatters.append(
                ScatterSample(
                    method=sel,
                    truth=_subsample(truth, _SCATTER_MAX_POINTS),
                    estimate=_subsample(est, _SCATTER_MAX_POINTS),
                )
            )
    return EvalReport(
        method_rows=method_rows,
        overall_rows=tuple(overall),
        scatters=tuple(scatters),
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    """repr-based float cell so identical values render identically."""
    return repr(float(x))


def _fmt_metric(x: float, not_available: bool = False) -> str:
    if not_available or math.isnan(x):
        return "NA"
    return _fmt(x)


def _noise_csv(report: EvalReport) -> str:
    mpp = report.elevation.meters_per_pixel_disparity
    lines = [NOISE_CSV_COLUMNS]
    for row in report.noise_rows:
        px = []
        meters = []
        for stats in (row.compressed, row.uncompressed):
            for value in (stats.min, stats.max, stats.mean, stats.std):
                px.append(_fmt(value))
                meters.append(_fmt(value * mpp))
        cells = (
            [_fmt(row.scale), _fmt(row.image_mean_dn), _fmt(row.image_std_dn)]
            + px
            + meters
            + [_fmt(row.invalid_fraction), "true" if row.degenerate else "false"]
        )
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _methods_csv(report: EvalReport) -> str:
    lines = [METHODS_CSV_COLUMNS]
    for row in report.method_rows:
        na = row.method == "none"  # the no-estimation baseline has no r/r2
        lines.append(
            ",".join(
                [
                    row.pair_id,
                    row.method,
                    _fmt(row.metrics.mean),
                    _fmt(row.metrics.sd),
                    _fmt_metric(row.metrics.r, na),
                    _fmt_metric(row.metrics.r2, na),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _overall_csv(report: EvalReport) -> str:
    lines = [OVERALL_CSV_COLUMNS]
    for row in report.overall_rows:
        na = row.method == "none"
        lines.append(
            ",".join(
                [
                    row.method,
                    _fmt(row.metrics.mean),
                    _fmt(row.metrics.sd),
                    _fmt_metric(row.metrics.r, na),
                    _fmt_metric(row.metrics.r2, na),
                    str(row.count),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, float):
        return None if math.isnan(x) else x
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _report_json(report: EvalReport) -> str:
    doc = {
        "noise_rows": [
            {
                "scale": row.scale,
                "image_mean_dn": row.image_mean_dn,
                "image_std_dn": row.image_std_dn,
                "compressed": vars(row.compressed),
                "uncompressed": vars(row.uncompressed),
                "invalid_fraction": row.invalid_fraction,
                "degenerate": row.degenerate,
            }
            for row in report.noise_rows
        ],
        "method_rows": [
            {"id": row.pair_id, "method": row.method, **vars(row.metrics)}
            for row in report.method_rows
        ],
        "overall_rows": [
            {"method": row.method, "count": row.count, **vars(row.metrics)}
            for row in report.overall_rows
        ],
        "meters_per_pixel_disparity": report.elevation.meters_per_pixel_disparity,
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _render_svg(report: EvalReport, out_dir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "selene-noise"
    written = []
    if report.profile is not None:
        fig, ax = plt.subplots(figsize=(8, 4))
        y = np.arange(report.profile.compressed.size)
        ax.plot(y, report.profile.compressed, lw=0.8, label="compressed")
        ax.plot(y, report.profile.uncompressed, lw=0.8, label="uncompressed")
        ax.set_xlabel("image row")
        ax.set_ylabel("disparity [px]")
        ax.set_title(
            f"{report.profile.pair_id}: disparity along column "
            f"{report.profile.column}"
        )
        ax.legend()
        path = out_dir / "profile.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    if report.scatters:
        fig, axes = plt.subplots(
            1, len(report.scatters),
            figsize=(5 * len(report.scatters), 5),
            squeeze=False,
        )
        for ax, sample in zip(axes[0], report.scatters):
            ax.plot(sample.truth, sample.estimate, ".", ms=1, alpha=0.3)
            lo = float(min(sample.truth.min(), sample.estimate.min()))
            hi = float(max(sample.truth.max(), sample.estimate.max()))
            ax.plot([lo, hi], [lo, hi], "k--", lw=0.8)
            ax.set_xlabel("true residual [px]")
            ax.set_ylabel("estimated residual [px]")
            ax.set_title(sample.method)
        path = out_dir / "scatter.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def render_report(report: EvalReport, out_dir: Path | str, fmt: str
                  ) -> list[Path]:
    """Write one format of the report into ``out_dir``; returns the paths.

    ``csv`` writes noise.csv / methods.csv / overall.csv for whichever row
    groups are present; ``json`` writes report.json; ``svg`` renders the
    profile and scatter figures for whatever samples the report carries.
    """
    if fmt not in REPORT_FORMATS:
        raise ContractError(
            f"unknown report format {fmt!r} (choose from {REPORT_FORMATS})"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        if report.noise_rows:
            path = out_dir / "noise.csv"
            path.write_text(_noise_csv(report))
            written.append(path)
        if report.method_rows:
            path = out_dir / "methods.csv"
            path.write_text(_methods_csv(report))
            written.append(path)
        if report.overall_rows:
            path = out_dir / "overall.csv"
            path.write_text(_overall_csv(report))
            written.append(path)
    elif fmt == "json":
        path = out_dir / "report.json"
        path.write_text(_report_json(report))
        written.append(path)
    else:
        written.extend(_render_svg(report, out_dir))
    return written
