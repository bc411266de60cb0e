"""Patch extraction, deterministic train/test splitting, and dataset export
for external learned residual estimators.

Patches tile the source rasters without overlap, anchored at the origin;
partial tiles at the right/bottom edges are discarded. Export writes one raw
float32 raster per patch per channel (left, right, residual) plus a JSON
lines manifest carrying the split labels and the global residual statistics
an external trainer needs for standardization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import (
    ImageGrid,
    ResidualField,
    SummaryStats,
    summary_stats,
    write_float_raster,
)
from .errors import ContractError

_CHANNELS = ("left", "right", "residual")


@dataclass(frozen=True)
class PatchRecord:
    source_id: str
    x0: int
    y0: int
    left: np.ndarray
    right: np.ndarray
    residual: np.ndarray  # NaN where invalid


@dataclass(frozen=True)
class PatchSet:
    patch_size: int
    records: tuple[PatchRecord, ...]
    split: tuple[str, ...] | None = None  # "train"/"test" per record
    seed: int | None = None

    def __post_init__(self):
        ps = self.patch_size
        for rec in self.records:
            for name in _CHANNELS:
                shape = getattr(rec, name).shape
                if shape != (ps, ps):
                    raise ContractError(
                        f"patch {rec.source_id} ({rec.x0}, {rec.y0}) channel "
                        f"{name} has shape {shape}, expected ({ps}, {ps})"
                    )
        if self.split is not None and len(self.split) != len(self.records):
            raise ContractError(
                f"{len(self.split)} split labels for {len(self.records)} records"
            )

    def __len__(self) -> int:
        return len(self.records)

    def residual_stats(self) -> SummaryStats:
        """Global statistics over every valid residual sample in the set."""
        chunks = [rec.residual[~np.isnan(rec.residual)] for rec in self.records]
        pooled = np.concatenate(chunks) if chunks else np.empty(0)
        return summary_stats(pooled)


def extract_patches(left: ImageGrid, right_rectified: ImageGrid,
                    residual: ResidualField, patch_size: int = 256,
                    source_id: str = "pair-0") -> PatchSet:
    """Tile three aligned rasters into non-overlapping square patches."""
    shape = left.pixels.shape
    if right_rectified.pixels.shape != shape or residual.values.shape != shape:
        raise ContractError(
            f"shape mismatch: left {shape}, right {right_rectified.pixels.shape}, "
            f"residual {residual.values.shape}"
        )
    h, w = shape
    if patch_size < 1:
        raise ContractError(f"patch_size must be >= 1, got {patch_size}")
    if patch_size > min(w, h):
        raise ContractError(
            f"patch_size {patch_size} exceeds raster extent {w}x{h}"
        )
    res_values = np.where(residual.valid, residual.values, np.nan)
    records = []
    for y0 in range(0, h - patch_size + 1, patch_size):
        for x0 in range(0, w - patch_size + 1, patch_size):
            box = (slice(y0, y0 + patch_size), slice(x0, x0 + patch_size))
            records.append(
                PatchRecord(
                    source_id=source_id,
                    x0=x0,
                    y0=y0,
                    left=left.pixels[box].copy(),
                    right=right_rectified.pixels[box].copy(),
                    residual=res_values[box].copy(),
                )
            )
    return PatchSet(patch_size=patch_size, records=tuple(records))


def split_labels(n: int, train_fraction: float, seed: int) -> tuple[str, ...]:
    """Deterministic train/test labels: a seeded shuffle takes the first
    ceil(train_fraction * n) positions as train."""
    if not (0.0 < train_fraction < 1.0):
        raise ContractError(
            f"train_fraction must be in (0, 1), got {train_fraction}"
        )
    n_train = int(np.ceil(train_fraction * n))
    order = np.random.default_rng(seed).permutation(n)
    labels = np.empty(n, dtype=object)
    labels[order[:n_train]] = "train"
    labels[order[n_train:]] = "test"
    return tuple(labels)


def split_dataset(patches: PatchSet, train_fraction: float = 0.9,
                  seed: int = 0) -> PatchSet:
    """Attach reproducible train/test labels to a patch set."""
    labels = split_labels(len(patches), train_fraction, seed)
    return replace(patches, split=labels, seed=seed)


def export_dataset(patches: PatchSet, out_dir: Path | str,
                   overwrite: bool = False) -> Path:
    """Write every patch as three raw float rasters plus a manifest.

    The manifest is JSON lines ordered by (source_id, y0, x0); each line
    carries the patch coordinates, split label, the three file paths, and
    the set-global residual mean/std used for standardization. Returns the
    manifest path. A non-empty target directory is refused unless
    ``overwrite`` is set.
    """
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not overwrite:
        raise ContractError(
            f"output directory {out_dir} is not empty (pass overwrite to reuse)"
        )
    out_dir.mkdir(parents=True, exist_ok=True)

    stats = patches.residual_stats()
    order = sorted(
        range(len(patches)),
        key=lambda i: (
            patches.records[i].source_id,
            patches.records[i].y0,
            patches.records[i].x0,
        ),
    )
    lines = []
    for i in order:
        rec = patches.records[i]
        stem = f"{rec.source_id}_y{rec.y0:06d}_x{rec.x0:06d}"
        entry = {
            "source_id": rec.source_id,
            "x0": rec.x0,
            "y0": rec.y0,
            "split": patches.split[i] if patches.split is not None else None,
            "mean": stats.mean,
            "std": stats.std,
        }
        for name in _CHANNELS:
            filename = f"{stem}_{name}.dspf"
            write_float_raster(getattr(rec, name), out_dir / filename)
            entry[name] = filename
        lines.append(
            json.dumps(entry, sort_keys=True, separators=(",", ":"))
        )
    manifest = out_dir / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + ("\n" if lines else ""))
    return manifest
