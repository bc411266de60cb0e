"""Residual estimators and the disparity-to-elevation conversion.

Estimators produce a ResidualField predicting the noise in a disparity map:
``lpf`` keeps what a Gaussian low-pass filter removes (the high-frequency
part, where quantization noise lives), ``null`` predicts zero everywhere
(the no-correction baseline), and ``import`` loads an externally computed
estimate (e.g. from a learned model) from the raw float raster format.

Blurring respects validity masks by convolving mask-weighted values and
renormalizing, so invalid samples neither contribute nor bleed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DisparityMap, ResidualField, read_disparity
from .errors import ContractError


@dataclass(frozen=True)
class ElevationModel:
    """Linear disparity-to-relief conversion (0.3 px corresponds to 5.45 m)."""

    meters_per_pixel_disparity: float = 5.45 / 0.3

    def __post_init__(self):
        if not self.meters_per_pixel_disparity > 0:
            raise ContractError(
                f"meters_per_pixel_disparity must be > 0, "
                f"got {self.meters_per_pixel_disparity}"
            )


def elevation_error(disp_error_px: float, model: ElevationModel = ElevationModel()
                    ) -> float:
    """Terrain relief error in meters for a disparity error in pixels."""
    return float(disp_error_px) * model.meters_per_pixel_disparity


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian taps truncated at radius ceil(4*sigma)."""
    if sigma <= 0:
        raise ContractError(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(4.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-0.5 * (x / sigma) ** 2)
    return taps / taps.sum()


def _conv1d(a: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    """Correlate along ``axis`` with zero padding outside the array."""
    radius = (taps.size - 1) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(a, pad)
    out = np.zeros_like(a)
    n = a.shape[axis]
    index = [slice(None), slice(None)]
    for t in range(taps.size):
        index[axis] = slice(t, t + n)
        out += taps[t] * padded[tuple(index)]
    return out


def masked_gaussian_blur(values: np.ndarray, valid: np.ndarray,
                         sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Separable Gaussian blur over valid pixels only.

    Weights of invalid (and out-of-image) samples are redistributed by
    dividing the blurred mask-weighted values by the blurred mask. Returns
    (blurred, ok) where ok marks pixels with any valid support; elsewhere
    the blur is undefined and set to NaN.
    """
    taps = gaussian_kernel(sigma)
    v = np.where(valid, values, 0.0).astype(np.float64)
    m = valid.astype(np.float64)
    num = _conv1d(_conv1d(v, taps, 0), taps, 1)
    den = _conv1d(_conv1d(m, taps, 0), taps, 1)
    ok = den > 0.0
    out = np.full(values.shape, np.nan)
    np.divide(num, den, out=out, where=ok)
    return out, ok


def lpf_residual_estimate(disp: DisparityMap, sigma: float = 3.0) -> ResidualField:
    """High-frequency content of a disparity map: disp - gaussian_blur(disp).

    A valid pixel always has itself as blur support, so the estimate's mask
    equals the input's.
    """
    blurred, _ = masked_gaussian_blur(disp.values, disp.valid, sigma)
    values = np.where(disp.valid, disp.values - blurred, np.nan)
    return ResidualField(values, disp.valid.copy())


def null_residual_estimate(disp: DisparityMap) -> ResidualField:
    """The no-correction baseline: zero at every valid pixel."""
    values = np.where(disp.valid, 0.0, np.nan)
    return ResidualField(values, disp.valid.copy())


def import_residual_estimate(path: Path | str) -> ResidualField:
    """Load an externally produced residual estimate (raw float raster plus
    optional mask). Dimension agreement is checked where the field is used."""
    dmap = read_disparity(path)
    return ResidualField(dmap.values, dmap.valid)


def apply_correction(disp: DisparityMap, estimate: ResidualField) -> DisparityMap:
    """Subtract a residual estimate from a disparity map (joint mask)."""
    if disp.values.shape != estimate.values.shape:
        raise ContractError(
            f"shape mismatch: disparity {disp.values.shape} "
            f"vs estimate {estimate.values.shape}"
        )
    valid = disp.valid & estimate.valid
    values = np.where(valid, disp.values - estimate.values, np.nan)
    return DisparityMap(values, valid)
