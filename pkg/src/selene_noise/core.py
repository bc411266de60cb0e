"""Raster and disparity value types plus bit-exact file I/O.

Formats
-------
Images travel either as 16-bit binary PGM (P5, maxval 65535, big-endian
samples) or as a raw little-endian float32 raster ("DSPF"). Disparity maps
and residual fields use the DSPF plane for values plus a parallel "DSPM"
file carrying the validity mask as packed bits (MSB first, rows padded to
byte boundaries). Invalid disparity samples are additionally written as a
quiet NaN so a lone DSPF file remains interpretable.

All value types are immutable after construction and safe to share between
threads; their numpy buffers are marked read-only.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, FormatError, SampleRangeError

DEFAULT_BIT_DEPTH = 14

_DSPF_MAGIC = b"DSPF"
_DSPM_MAGIC = b"DSPM"
# Canonical float32 quiet-NaN bit pattern used for invalid disparity samples.
_NAN_PAYLOAD = np.uint32(0x7FC00000)

STATS_CSV_HEADER = "min,max,mean,std,count"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SummaryStats:
    """Population statistics (std divides by count) of a pixel set."""

    min: float
    max: float
    mean: float
    std: float
    count: int

    def __post_init__(self):
        if self.count > 0:
            if not (self.min <= self.mean <= self.max):
                raise ContractError(
                    f"inconsistent stats: min {self.min}, mean {self.mean}, max {self.max}"
                )
            if self.std < 0:
                raise ContractError(f"negative std {self.std}")

    def to_csv_row(self) -> str:
        return f"{self.min!r},{self.max!r},{self.mean!r},{self.std!r},{self.count}"


def summary_stats(values: np.ndarray, valid: np.ndarray | None = None) -> SummaryStats:
    """Population summary of ``values`` restricted to ``valid`` pixels."""
    v = np.asarray(values, dtype=np.float64)
    if valid is not None:
        v = v[np.asarray(valid, dtype=bool)]
    v = v.ravel()
    if v.size == 0:
        return SummaryStats(np.nan, np.nan, np.nan, np.nan, 0)
    return SummaryStats(
        min=float(v.min()),
        max=float(v.max()),
        mean=float(v.mean()),
        std=float(v.std()),  # population convention
        count=int(v.size),
    )


def write_stats_csv(stats: SummaryStats, path: Path | str) -> None:
    Path(path).write_text(f"{STATS_CSV_HEADER}\n{stats.to_csv_row()}\n")


@dataclass(frozen=True)
class ImageGrid:
    """2D raster of DN values; pixels are float64 regardless of bit depth."""

    pixels: np.ndarray
    bit_depth: int = DEFAULT_BIT_DEPTH

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2:
            raise ContractError(f"pixels must be 2D, got shape {p.shape}")
        h, w = p.shape
        if h < 8 or w < 8:
            raise ContractError(f"image must be at least 8x8, got {w}x{h}")
        if not (1 <= self.bit_depth <= 16):
            raise ContractError(f"bit_depth must be in [1, 16], got {self.bit_depth}")
        if not np.all(np.isfinite(p)):
            raise ContractError("pixels must be finite")
        object.__setattr__(self, "pixels", _readonly(p))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def dn_ceiling(self) -> float:
        """Largest DN representable at this bit depth."""
        return float(2**self.bit_depth - 1)

    def stats(self) -> SummaryStats:
        return summary_stats(self.pixels)


@dataclass(frozen=True)
class DisparityMap:
    """Sub-pixel disparity along the y direction with a validity mask."""

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        m = np.asarray(self.valid, dtype=bool)
        if v.ndim != 2 or m.shape != v.shape:
            raise ContractError(
                f"values/valid shape mismatch: {v.shape} vs {m.shape}"
            )
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "valid", _readonly(m))

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "DisparityMap":
        return cls(
            np.full((height, width), float(value)),
            np.ones((height, width), dtype=bool),
        )

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def invalid_fraction(self) -> float:
        return 1.0 - float(self.valid.sum()) / self.valid.size

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid]

    def stats(self) -> SummaryStats:
        return summary_stats(self.values, self.valid)


@dataclass(frozen=True)
class ResidualField:
    """Disparity residual raster; stats are recomputed on construction."""

    values: np.ndarray
    valid: np.ndarray
    stats: SummaryStats = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        m = np.asarray(self.valid, dtype=bool)
        if v.ndim != 2 or m.shape != v.shape:
            raise ContractError(
                f"values/valid shape mismatch: {v.shape} vs {m.shape}"
            )
        if not np.all(np.isfinite(v[m])):
            raise ContractError("valid residual values must be finite")
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "valid", _readonly(m))
        object.__setattr__(self, "stats", summary_stats(v, m))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid]


# ---------------------------------------------------------------------------
# PGM (P5, 16-bit big-endian)
# ---------------------------------------------------------------------------

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _parse_pgm_header(data: bytes, path: Path) -> tuple[int, int, int, int]:
    """Return (width, height, maxval, pixel data offset); raise FormatError
    naming the byte offset of the first malformed byte."""

    def fail(msg: str, at: int):
        raise FormatError(f"{path}: {msg} at byte offset {at}")

    if data[:2] != b"P5":
        fail("expected P5 magic", 0)
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and '#' comment lines between tokens
        while pos < len(data) and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                nl = data.find(b"\n", pos)
                if nl < 0:
                    fail("unterminated comment", pos)
                pos = nl + 1
            else:
                pos += 1
        if pos >= len(data):
            fail("unexpected end of header", pos)
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE:
            if not (ord("0") <= data[pos] <= ord("9")):
                fail(f"invalid header token {data[start:pos + 1]!r}", pos)
            pos += 1
        if pos == start:
            fail("empty header token", pos)
        fields.append((int(data[start:pos]), start))
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        fail("expected single whitespace after maxval", pos)
    pos += 1
    (width, w_at), (height, h_at), (maxval, m_at) = fields
    if width <= 0 or height <= 0:
        fail(f"non-positive dimensions {width}x{height}", w_at)
    if maxval != 65535:
        fail(f"unsupported maxval {maxval} (only 16-bit PGM accepted)", m_at)
    return width, height, maxval, pos


def _sidecar_path(path: Path) -> Path:
    return Path(str(path) + ".json")


def _sidecar_bit_depth(path: Path) -> int | None:
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        return None
    try:
        meta = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{sidecar}: invalid sidecar JSON: {exc}") from exc
    depth = meta.get("bit_depth")
    if depth is None:
        return None
    if not isinstance(depth, int) or not (1 <= depth <= 16):
        raise FormatError(f"{sidecar}: bad bit_depth {depth!r}")
    return depth


def read_raster(path: Path | str, bit_depth: int | None = None) -> ImageGrid:
    """Read a PGM or raw-float raster; the format is sniffed from the magic.

    Bit depth resolution order: explicit argument, then the optional
    "<path>.json" sidecar, then the 14-bit default. Samples above the
    resulting DN ceiling raise :class:`SampleRangeError`.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == _DSPF_MAGIC:
        values = _decode_dspf(data, path).astype(np.float64)
    elif data[:2] == b"P5":
        width, height, _, offset = _parse_pgm_header(data, path)
        need = width * height * 2
        if len(data) - offset < need:
            raise FormatError(
                f"{path}: truncated pixel data, expected {need} bytes "
                f"from byte offset {offset}, found {len(data) - offset}"
            )
        samples = np.frombuffer(data, dtype=">u2", count=width * height, offset=offset)
        values = samples.astype(np.float64).reshape(height, width)
    else:
        raise FormatError(f"{path}: unrecognized raster magic at byte offset 0")

    if bit_depth is None:
        bit_depth = _sidecar_bit_depth(path) or DEFAULT_BIT_DEPTH
    ceiling = float(2**bit_depth - 1)
    if not np.all(np.isfinite(values)):
        raise SampleRangeError(f"{path}: non-finite sample in raster")
    worst = float(values.max(initial=0.0))
    if worst > ceiling or float(values.min(initial=0.0)) < 0.0:
        raise SampleRangeError(
            f"{path}: sample {worst} outside [0, {ceiling:.0f}] for bit depth {bit_depth}"
        )
    return ImageGrid(values, bit_depth=bit_depth)


def write_raster(img: ImageGrid, path: Path | str) -> None:
    """Write an image as PGM (".pgm", rounded to integers) or raw float
    (".dspf", exact float32). A bit-depth sidecar is written when needed."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        rounded = np.floor(np.abs(img.pixels) + 0.5) * np.sign(img.pixels)
        if rounded.min() < 0 or rounded.max() > 65535:
            raise ContractError(
                f"pixel {rounded[np.unravel_index(np.argmax(np.abs(rounded)), rounded.shape)]}"
                " cannot be stored in a 16-bit PGM"
            )
        header = f"P5\n{img.width} {img.height}\n65535\n".encode("ascii")
        body = rounded.astype(">u2").tobytes()
        _write_atomic(path, header + body)
    elif suffix == ".dspf":
        _write_atomic(path, _encode_dspf(img.pixels))
    else:
        raise ContractError(
            f"unsupported raster extension {path.suffix!r} (use .pgm or .dspf)"
        )
    if img.bit_depth != DEFAULT_BIT_DEPTH:
        _sidecar_path(path).write_text(json.dumps({"bit_depth": img.bit_depth}) + "\n")


def _write_atomic(path: Path, payload: bytes) -> None:
    try:
        path.write_bytes(payload)
    except OSError as exc:
        raise FormatError(f"{path}: cannot write raster: {exc}") from exc


# ---------------------------------------------------------------------------
# Raw float raster (DSPF) and packed validity mask (DSPM)
# ---------------------------------------------------------------------------


def _encode_dspf(values: np.ndarray) -> bytes:
    h, w = values.shape
    return (
        _DSPF_MAGIC
        + struct.pack("<II", w, h)
        + np.asarray(values, dtype="<f4").tobytes(order="C")
    )


def _decode_dspf(data: bytes, path: Path) -> np.ndarray:
    if data[:4] != _DSPF_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {_DSPF_MAGIC!r}")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    w, h = struct.unpack_from("<II", data, 4)
    if w == 0 or h == 0:
        raise FormatError(f"{path}: zero dimension {w}x{h}")
    need = 12 + 4 * w * h
    if len(data) < need:
        raise FormatError(f"{path}: truncated, expected {need} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f4", count=w * h, offset=12).reshape(h, w)


def _encode_dspm(valid: np.ndarray) -> bytes:
    h, w = valid.shape
    packed = np.packbits(valid.astype(np.uint8), axis=1)  # MSB first, row padded
    return _DSPM_MAGIC + struct.pack("<II", w, h) + packed.tobytes(order="C")


def _decode_dspm(data: bytes, path: Path) -> np.ndarray:
    if data[:4] != _DSPM_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {_DSPM_MAGIC!r}")
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    w, h = struct.unpack_from("<II", data, 4)
    stride = (w + 7) // 8
    need = 12 + stride * h
    if len(data) < need:
        raise FormatError(f"{path}: truncated, expected {need} bytes, found {len(data)}")
    rows = np.frombuffer(data, dtype=np.uint8, count=stride * h, offset=12)
    bits = np.unpackbits(rows.reshape(h, stride), axis=1)[:, :w]
    return bits.astype(bool)


def mask_path_for(path: Path | str) -> Path:
    """DSPM companion path: swap a .dspf suffix for .dspm, else append it."""
    path = Path(path)
    if path.suffix.lower() == ".dspf":
        return path.with_suffix(".dspm")
    return Path(str(path) + ".dspm")


def write_disparity(dmap: DisparityMap, path: Path | str) -> None:
    """Write values (DSPF, float32) and mask (DSPM). Invalid samples carry a
    quiet-NaN payload so the values plane alone is still interpretable."""
    path = Path(path)
    values32 = np.asarray(dmap.values, dtype=np.float32).copy()
    values32[~dmap.valid] = _NAN_PAYLOAD.view(np.float32)
    _write_atomic(path, _encode_dspf(values32))
    _write_atomic(mask_path_for(path), _encode_dspm(dmap.valid))


def write_float_raster(values: np.ndarray, path: Path | str) -> None:
    """Write a bare float32 raster (DSPF, no mask file); NaNs are normalized
    to the quiet payload so invalid samples survive the round trip."""
    v = np.asarray(values, dtype=np.float32).copy()
    nan = np.isnan(v)
    if nan.any():
        v[nan] = _NAN_PAYLOAD.view(np.float32)
    _write_atomic(Path(path), _encode_dspf(v))


def read_float_raster(path: Path | str) -> np.ndarray:
    """Read a bare float32 raster (DSPF) as float64; NaN marks invalid."""
    path = Path(path)
    return _decode_dspf(path.read_bytes(), path).astype(np.float64)


def read_disparity(path: Path | str) -> DisparityMap:
    """Read a DSPF disparity plane; the DSPM mask is used when present,
    otherwise validity falls back to non-NaN samples."""
    path = Path(path)
    values32 = _decode_dspf(path.read_bytes(), path)
    mask_file = mask_path_for(path)
    if mask_file.exists():
        valid = _decode_dspm(mask_file.read_bytes(), mask_file)
        if valid.shape != values32.shape:
            raise FormatError(
                f"{mask_file}: mask shape {valid.shape} does not match values {values32.shape}"
            )
    else:
        valid = ~np.isnan(values32)
    values = values32.astype(np.float64)
    values[~valid] = np.nan
    return DisparityMap(values, valid)
