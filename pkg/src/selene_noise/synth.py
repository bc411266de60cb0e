"""Synthetic lunar-like terrain imagery and ground-truth stereo construction.

Real flight imagery cannot ship with the repository, so test imagery is
synthesized: a power-law (spectral synthesis) fractal height field, shaded
with a linearized Lambertian model and modulated by a smooth albedo field,
then renormalized to a target DN mean/std. The property that matters
downstream is broadband texture for correlation matching.

Ground-truth stereo pairs are built by cropping one image twice at a fixed
row offset (self-stereo), giving an exactly known constant disparity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import ImageGrid, DisparityMap
from .errors import ContractError

# Internal shading contrast: RMS slope of the relief fed to the shading model.
_SLOPE_RMS = 0.25
# Weak, spectrally flat-ish albedo texture. This is what gives the matcher its
# sharp sub-pixel lock at full DN; being low-amplitude, it is also the first
# casualty of coefficient quantization as the scene darkens.
_ALBEDO_CONTRAST = 0.015
_ALBEDO_EXPONENT = 1.0
_CLAMP_WARN_FRACTION = 1e-3


@dataclass(frozen=True)
class TerrainParams:
    """Generator parameters; defaults target the full-scale DN regime."""

    width: int
    height: int
    seed: int = 0
    spectral_exponent: float = 3.5  # of the output image's power spectrum
    target_mean_dn: float = 1552.680
    target_std_dn: float = 298.060
    sun_elevation_deg: float = 35.0
    sun_azimuth_deg: float = 45.0

    def __post_init__(self):
        if self.target_std_dn <= 0:
            raise ContractError(f"target_std_dn must be > 0, got {self.target_std_dn}")
        ceiling = 2**14 - 1
        lo = self.target_mean_dn - 4 * self.target_std_dn
        hi = self.target_mean_dn + 4 * self.target_std_dn
        if lo < 0 or hi > ceiling:
            raise ContractError(
                f"target mean +/- 4*std [{lo:.1f}, {hi:.1f}] must fit inside [0, {ceiling}]"
            )

    @classmethod
    def from_dict(cls, d: dict) -> "TerrainParams":
        return cls(**d)


def power_law_field(height: int, width: int, exponent: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Zero-mean unit-std field whose power spectrum falls as f^-exponent."""
    white = rng.standard_normal((height, width))
    spectrum = np.fft.rfft2(white)
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.rfftfreq(width)[None, :]
    f = np.hypot(fy, fx)
    amp = np.zeros_like(f)
    nonzero = f > 0
    amp[nonzero] = f[nonzero] ** (-exponent / 2.0)
    field = np.fft.irfft2(spectrum * amp, s=(height, width))
    std = field.std()
    if std == 0:
        raise ContractError("degenerate spectral field (zero variance)")
    return (field - field.mean()) / std


def _clamp_with_warning(pixels: np.ndarray, ceiling: float,
                        threshold: float = _CLAMP_WARN_FRACTION) -> np.ndarray:
    clipped = np.clip(pixels, 0.0, ceiling)
    frac = float(np.count_nonzero(clipped != pixels)) / pixels.size
    if frac > threshold:
        warnings.warn(
            f"{frac:.2%} of pixels clamped to [0, {ceiling:.0f}] "
            f"(threshold {threshold:.2%})",
            stacklevel=3,
        )
    return clipped


def generate_terrain(params: TerrainParams) -> ImageGrid:
    """Deterministic synthetic terrain image for the given parameters.

    The output sample mean and std hit the targets exactly up to clamping;
    the generator warns if more than 0.1% of pixels clamp.
    """
    if params.width < 64 or params.height < 64:
        raise ContractError(
            f"terrain must be at least 64x64, got {params.width}x{params.height}"
        )
    height_ss, albedo_ss = np.random.SeedSequence(params.seed).spawn(2)
    # Shading differentiates the relief (power spectrum gains f^2), so the
    # relief is built two exponents steeper than the image is asked to be.
    relief = power_law_field(
        params.height, params.width, params.spectral_exponent + 2.0,
        np.random.default_rng(height_ss),
    )

    # Linearized Lambertian shading: constant at sun elevation 90 degrees.
    hy, hx = np.gradient(relief)
    rms = np.sqrt(np.mean(hx**2 + hy**2))
    scale = _SLOPE_RMS / rms if rms > 0 else 0.0
    hx *= scale
    hy *= scale
    el = np.deg2rad(params.sun_elevation_deg)
    az = np.deg2rad(params.sun_azimuth_deg)
    shading = np.maximum(
        0.0, np.sin(el) - np.cos(el) * (hx * np.cos(az) + hy * np.sin(az))
    )

    albedo = 1.0 + _ALBEDO_CONTRAST * power_law_field(
        params.height, params.width, _ALBEDO_EXPONENT,
        np.random.default_rng(albedo_ss),
    )
    np.clip(albedo, 0.05, None, out=albedo)

    img = albedo * shading
    std = img.std()
    if std == 0:
        raise ContractError("degenerate terrain (zero variance image)")
    z = (img - img.mean()) / std
    pixels = params.target_mean_dn + params.target_std_dn * z
    pixels = _clamp_with_warning(pixels, float(2**14 - 1))
    return ImageGrid(pixels, bit_depth=14)


def scale_dn(img: ImageGrid, s: float) -> ImageGrid:
    """Multiply every pixel by ``s`` (mean and std scale linearly)."""
    if s <= 0:
        raise ContractError(f"scale must be > 0, got {s}")
    return ImageGrid(img.pixels * s, bit_depth=img.bit_depth)


def make_shifted_pair(img: ImageGrid, shift_px: int = 97
                      ) -> tuple[ImageGrid, ImageGrid, DisparityMap]:
    """Self-stereo pair with exactly known constant disparity.

    The left image is the central band of rows [shift, H-shift); the right
    image is the same-size crop offset by ``shift_px`` rows (rows
    [0, H-2*shift)), so right(x, y + shift) == left(x, y) and the true
    disparity is ``shift_px`` everywhere.
    """
    if int(shift_px) != shift_px or shift_px < 0:
        raise ContractError(f"shift_px must be a non-negative integer, got {shift_px}")
    shift_px = int(shift_px)
    h = img.height - 2 * shift_px
    if 2 * shift_px >= img.height or h < 8:
        raise ContractError(
            f"image height {img.height} too small for shift {shift_px} "
            f"(needs at least {2 * shift_px + 8} rows)"
        )
    left = ImageGrid(img.pixels[shift_px : shift_px + h, :], bit_depth=img.bit_depth)
    right = ImageGrid(img.pixels[0:h, :], bit_depth=img.bit_depth)
    truth = DisparityMap.constant(img.width, h, float(shift_px))
    return left, right, truth


# Catmull-Rom weights; exact on polynomials up to degree 2 and at the nodes.
def _catmull_rom(p0, p1, p2, p3, u):
    return 0.5 * (
        2.0 * p1
        + u * (p2 - p0)
        + u * u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3)
        + u * u * u * (3.0 * (p1 - p2) + p3 - p0)
    )


def warp_by_disparity(img: ImageGrid, disp: DisparityMap
                      ) -> tuple[ImageGrid, np.ndarray]:
    """Resample ``img`` along y so output(x, y) = img(x, y + disp(x, y)).

    Fractional offsets use cubic (Catmull-Rom) interpolation along y only;
    integer offsets copy source rows exactly. Returns the warped image and a
    validity mask; pixels whose source (or cubic stencil) falls outside the
    image, or whose disparity is invalid, are masked out and set to 0.
    """
    if (img.height, img.width) != (disp.height, disp.width):
        raise ContractError(
            f"shape mismatch: image {img.pixels.shape} vs disparity {disp.values.shape}"
        )
    h, w = img.height, img.width
    pixels = img.pixels
    rows = np.arange(h, dtype=np.float64)[:, None]
    src = rows + np.where(disp.valid, disp.values, 0.0)
    k = np.floor(src)
    u = src - k
    k = k.astype(np.int64)
    cols = np.broadcast_to(np.arange(w), (h, w))

    exact = u == 0.0
    ok_exact = exact & (k >= 0) & (k <= h - 1)
    ok_cubic = ~exact & (k - 1 >= 0) & (k + 2 <= h - 1)
    valid = disp.valid & (ok_exact | ok_cubic)

    kc = np.clip(k, 1, max(h - 3, 1))
    p0 = pixels[kc - 1, cols]
    p1 = pixels[kc, cols]
    p2 = pixels[kc + 1, cols]
    p3 = pixels[kc + 2, cols]
    out = _catmull_rom(p0, p1, p2, p3, u)
    out = np.where(ok_exact, pixels[np.clip(k, 0, h - 1), cols], out)
    out = np.where(valid, out, 0.0)
    return ImageGrid(out, bit_depth=img.bit_depth), valid
