"""Sub-pixel 1D stereo matching along the y direction.

Cost is zero-mean normalized cross-correlation (ZNCC) between fixed windows
in the left image and windows at integer row offsets in the right image;
the best integer offset is refined by a parabola fit through the three
scores around the peak. Pixels are marked invalid when their window leaves
the image, the window is textureless, or the peak sits on the search
boundary.

The implementation is sliding-window (integral-image box sums), but every
pixel's result equals the naive per-window computation, so output is
independent of how work is split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DisparityMap, ImageGrid
from .errors import ContractError

_SUBPIXEL_MODES = ("parabola", "none")


@dataclass(frozen=True)
class MatcherConfig:
    window_half: int = 7
    search_center: int = 97
    search_half_range: int = 3
    min_valid_std: float = 1e-6
    subpixel: str = "parabola"

    def __post_init__(self):
        if self.window_half < 2:
            raise ContractError(f"window_half must be >= 2, got {self.window_half}")
        if self.search_half_range < 1:
            raise ContractError(
                f"search_half_range must be >= 1, got {self.search_half_range}"
            )
        if self.min_valid_std < 0:
            raise ContractError(f"min_valid_std must be >= 0, got {self.min_valid_std}")
        if self.subpixel not in _SUBPIXEL_MODES:
            raise ContractError(
                f"subpixel must be one of {_SUBPIXEL_MODES}, got {self.subpixel!r}"
            )

    @classmethod
    def from_dict(cls, d: dict) -> "MatcherConfig":
        return cls(**d)


def refine_subpixel(c_minus: float, c_0: float, c_plus: float) -> float:
    """Parabola-vertex offset of a correlation peak, clamped to [-0.5, 0.5].

    The triple must already peak at the center; a flat triple returns 0.
    """
    if c_0 < c_minus or c_0 < c_plus:
        raise ContractError(
            f"peak not at center: ({c_minus}, {c_0}, {c_plus})"
        )
    denom = 2.0 * (c_minus - 2.0 * c_0 + c_plus)
    if denom == 0.0:
        return 0.0
    return float(np.clip((c_minus - c_plus) / denom, -0.5, 0.5))


def _box_sum(a: np.ndarray, r: int) -> np.ndarray:
    """Sum over the (2r+1)^2 window centered at each interior pixel; border
    entries (within r of an edge) are left at 0 and must be masked off."""
    h, w = a.shape
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    side = 2 * r + 1
    out = np.zeros_like(a, dtype=np.float64)
    out[r : h - r, r : w - r] = (
        integral[side:, side:]
        - integral[: h - 2 * r, side:]
        - integral[side:, : w - 2 * r]
        + integral[: h - 2 * r, : w - 2 * r]
    )
    return out


def _shift_rows(a: np.ndarray, d: int) -> np.ndarray:
    """b[y] = a[y + d]; rows without a source are 0 (masked off later)."""
    out = np.zeros_like(a)
    if d >= 0:
        if d < a.shape[0]:
            out[: a.shape[0] - d] = a[d:]
    else:
        out[-d:] = a[: a.shape[0] + d]
    return out


def _window_is_textured(a: np.ndarray, r: int) -> np.ndarray:
    """True where the (2r+1)^2 window around a pixel is not constant.

    Uses separable sliding min/max, which is exact; the box-sum variance
    cannot be trusted near zero (catastrophic cancellation in the integral
    image leaves noise far above n * min_valid_std^2 for any realistic
    threshold), so perfectly flat windows are detected here instead.
    """
    hi = a
    lo = a
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (r, r)
        hi_p = np.pad(hi, pad, constant_values=-np.inf)
        lo_p = np.pad(lo, pad, constant_values=np.inf)
        n = a.shape[axis]
        index = [slice(None), slice(None)]
        hi_views = []
        lo_views = []
        for t in range(2 * r + 1):
            index[axis] = slice(t, t + n)
            hi_views.append(hi_p[tuple(index)])
            lo_views.append(lo_p[tuple(index)])
        hi = np.maximum.reduce(hi_views)
        lo = np.minimum.reduce(lo_views)
    return hi > lo


def match_disparity(left: ImageGrid, right: ImageGrid,
                    cfg: MatcherConfig = MatcherConfig()) -> DisparityMap:
    """Dense sub-pixel disparity of ``left`` against ``right`` along y.

    For each pixel, ZNCC is evaluated at integer offsets
    [search_center - range, search_center + range]; the winning offset is
    refined to a fraction of a pixel by a parabola through the neighboring
    scores (cfg.subpixel == "parabola"). Invalid pixels carry NaN.
    """
    if left.pixels.shape != right.pixels.shape:
        raise ContractError(
            f"shape mismatch: {left.pixels.shape} vs {right.pixels.shape}"
        )
    h, w = left.pixels.shape
    r = cfg.window_half
    n = float((2 * r + 1) ** 2)
    offsets = np.arange(
        cfg.search_center - cfg.search_half_range,
        cfg.search_center + cfg.search_half_range + 1,
    )
    var_floor = n * cfg.min_valid_std**2

    # Global centering improves the conditioning of the variance sums and
    # leaves ZNCC unchanged (it subtracts window means anyway).
    lp = left.pixels - left.pixels.mean()
    rp = right.pixels - right.pixels.mean()

    sum_l = _box_sum(lp, r)
    var_l = np.maximum(_box_sum(lp * lp, r) - sum_l * sum_l / n, 0.0)
    sum_r = _box_sum(rp, r)
    var_r = np.maximum(_box_sum(rp * rp, r) - sum_r * sum_r / n, 0.0)
    tex_l = _window_is_textured(lp, r)
    tex_r = _window_is_textured(rp, r)

    scores = np.full((offsets.size, h, w), -2.0, dtype=np.float64)
    for i, d in enumerate(offsets):
        rp_d = _shift_rows(rp, int(d))
        cross = _box_sum(lp * rp_d, r) - sum_l * _shift_rows(sum_r, int(d)) / n
        var_rd = _shift_rows(var_r, int(d))
        denom = np.sqrt(var_l * var_rd)
        usable = (
            (var_l > var_floor)
            & (var_rd > var_floor)
            & tex_l
            & _shift_rows(tex_r, int(d))
        )
        np.divide(cross, denom, out=scores[i], where=usable)
        scores[i][~usable] = -2.0

    best = scores.argmax(axis=0)
    c0 = np.take_along_axis(scores, best[None], axis=0)[0]

    # Window-interior margins for the full search range.
    dmin, dmax = int(offsets[0]), int(offsets[-1])
    y = np.arange(h)[:, None]
    x = np.arange(w)[None, :]
    in_rows = (y >= max(r, r - dmin)) & (y <= min(h - 1 - r, h - 1 - r - dmax))
    in_cols = (x >= r) & (x <= w - 1 - r)
    valid = (
        in_rows
        & in_cols
        & (best > 0)
        & (best < offsets.size - 1)
        & (c0 > -2.0)
        & (var_l > var_floor)
        & tex_l
    )

    values = offsets[best].astype(np.float64)
    if cfg.subpixel == "parabola":
        below = np.take_along_axis(scores, np.maximum(best - 1, 0)[None], axis=0)[0]
        above = np.take_along_axis(
            scores, np.minimum(best + 1, offsets.size - 1)[None], axis=0
        )[0]
        valid &= (below > -2.0) & (above > -2.0)
        denom = 2.0 * (below - 2.0 * c0 + above)
        frac = np.zeros_like(c0)
        np.divide(below - above, denom, out=frac, where=denom != 0.0)
        values += np.clip(frac, -0.5, 0.5)

    values[~valid] = np.nan
    return DisparityMap(values, valid)
