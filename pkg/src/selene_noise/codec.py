"""Blockwise DCT quantization codec simulating the lossy stage of
Kaguya-TC-style JPEG compression.

Only the lossy path is modeled: level shift, 8x8 orthonormal DCT-II,
divisor-table quantization, dequantization, inverse DCT, clamp. Entropy
coding is lossless and therefore omitted.

Scaling note: the transform is the orthonormal (unitary) 2D DCT-II, so
quantization-table entries are interpreted in the orthonormal coefficient
domain. The scaling the flight codec paired with these tables is not public;
absolute noise magnitudes in DN are a modeling choice, and downstream claims
are about trends, not flight-data replication.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ImageGrid, ResidualField, _readonly
from .errors import ContractError, FormatError

BLOCK = 8


def _dct_matrix() -> np.ndarray:
    n = np.arange(BLOCK)
    k = n[:, None]
    m = np.cos(np.pi * (2 * n[None, :] + 1) * k / (2 * BLOCK))
    m[0, :] *= np.sqrt(1.0 / BLOCK)
    m[1:, :] *= np.sqrt(2.0 / BLOCK)
    return _readonly(m)


DCT_MATRIX = _dct_matrix()


@dataclass(frozen=True)
class QuantTable:
    """Named 8x8 table of positive integer divisors; entry [0][0] divides the
    lowest-frequency (DC) coefficient."""

    name: str
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.shape != (BLOCK, BLOCK):
            raise ContractError(f"quantization table must be 8x8, got {e.shape}")
        if not np.issubdtype(e.dtype, np.integer):
            if not np.all(e == np.rint(e)):
                raise ContractError("quantization table entries must be integers")
            e = e.astype(np.int64)
        e = e.astype(np.int64)
        if e.min() < 1:
            raise ContractError(f"quantization entries must be >= 1, found {e.min()}")
        object.__setattr__(self, "entries", _readonly(e))


# Flight table applied to ~56% of all Kaguya TC images; the other tables are
# not public and must be supplied as text files.
SF008S_A = QuantTable(
    "SF008S_A",
    np.array(
        [
            [3, 2, 2, 3, 4, 6, 8, 10],
            [2, 2, 2, 3, 4, 9, 10, 9],
            [2, 2, 3, 4, 6, 9, 11, 9],
            [2, 3, 4, 5, 8, 14, 13, 10],
            [3, 4, 6, 9, 11, 17, 16, 12],
            [4, 6, 9, 10, 13, 17, 18, 15],
            [8, 10, 12, 14, 16, 20, 20, 16],
            [12, 15, 15, 16, 18, 16, 16, 16],
        ],
        dtype=np.int64,
    ),
)

_BUILTIN_TABLES = {SF008S_A.name: SF008S_A}


def builtin_table(name: str) -> QuantTable:
    try:
        return _BUILTIN_TABLES[name]
    except KeyError:
        raise ContractError(
            f"unknown built-in quantization table {name!r}; available: "
            f"{sorted(_BUILTIN_TABLES)}"
        ) from None


def load_quant_table(path: Path | str) -> QuantTable:
    """Load a table from text: 8 lines of 8 whitespace-separated positive
    integers; '#' starts a comment line. The name is the file stem."""
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != BLOCK:
            raise FormatError(
                f"{path}:{lineno}: expected 8 integers, got {len(parts)}"
            )
        try:
            rows.append([int(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-integer entry: {exc}") from exc
    if len(rows) != BLOCK:
        raise FormatError(f"{path}: expected 8 table rows, got {len(rows)}")
    try:
        return QuantTable(path.stem, np.array(rows, dtype=np.int64))
    except ContractError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def resolve_table(spec: str | QuantTable) -> QuantTable:
    """Accept a QuantTable, a built-in name, or a text-file path."""
    if isinstance(spec, QuantTable):
        return spec
    if spec in _BUILTIN_TABLES:
        return _BUILTIN_TABLES[spec]
    if Path(spec).exists():
        return load_quant_table(spec)
    raise ContractError(
        f"quantization table {spec!r} is neither a built-in name nor an existing file"
    )


def dct8_forward(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2D DCT-II of an 8x8 block (preserves the L2 norm)."""
    b = np.asarray(block, dtype=np.float64)
    if b.shape != (BLOCK, BLOCK):
        raise ContractError(f"block must be 8x8, got {b.shape}")
    return DCT_MATRIX @ b @ DCT_MATRIX.T


def dct8_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`dct8_forward`."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (BLOCK, BLOCK):
        raise ContractError(f"coefficient block must be 8x8, got {c.shape}")
    return DCT_MATRIX.T @ c @ DCT_MATRIX


def round_half_away_from_zero(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return (np.floor(np.abs(x) + 0.5) * np.sign(x)).astype(np.int64)


def quantize(coeffs: np.ndarray, table: QuantTable) -> np.ndarray:
    """q[i][j] = round_half_away_from_zero(c[i][j] / entries[i][j])."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (BLOCK, BLOCK):
        raise ContractError(f"coefficient block must be 8x8, got {c.shape}")
    return round_half_away_from_zero(c / table.entries)


def dequantize(q: np.ndarray, table: QuantTable) -> np.ndarray:
    """d[i][j] = q[i][j] * entries[i][j]."""
    q = np.asarray(q)
    if q.shape != (BLOCK, BLOCK):
        raise ContractError(f"quantized block must be 8x8, got {q.shape}")
    return q.astype(np.float64) * table.entries


def compress_image(img: ImageGrid, table: QuantTable) -> ImageGrid:
    """Run every 8x8 block through the lossy stage and clamp to the DN range.

    Dimensions that are not multiples of 8 are edge-replicated out to the
    next multiple, processed, and cropped back. Blocks are processed
    independently, so output is identical however the work is split.
    """
    h, w = img.height, img.width
    pad_h = (-h) % BLOCK
    pad_w = (-w) % BLOCK
    pixels = np.pad(img.pixels, ((0, pad_h), (0, pad_w)), mode="edge")
    level = 2.0 ** (img.bit_depth - 1)
    out = np.empty_like(pixels)
    for by in range(0, pixels.shape[0], BLOCK):
        for bx in range(0, pixels.shape[1], BLOCK):
            block = pixels[by : by + BLOCK, bx : bx + BLOCK] - level
            coeffs = dct8_forward(block)
            rec = dct8_inverse(dequantize(quantize(coeffs, table), table))
            out[by : by + BLOCK, bx : bx + BLOCK] = rec + level
    out = out[:h, :w]
    np.clip(out, 0.0, img.dn_ceiling, out=out)
    return ImageGrid(out, bit_depth=img.bit_depth)


def compression_residual(original: ImageGrid, compressed: ImageGrid) -> ResidualField:
    """Per-pixel DN residual, compressed minus original, all pixels valid."""
    if original.pixels.shape != compressed.pixels.shape:
        raise ContractError(
            f"shape mismatch: {original.pixels.shape} vs {compressed.pixels.shape}"
        )
    diff = compressed.pixels - original.pixels
    return ResidualField(diff, np.ones_like(diff, dtype=bool))
