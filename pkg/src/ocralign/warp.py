"""Raster warping for visual checks of an estimated alignment.

Only binary PGM (P5) and PPM (P6) with maxval 255 are read and written.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, UnsupportedMaxvalError
from .geometry import Homography, invert

WHITE = 255
ROW_CHUNK = 256

_CHANNELS = {b"P5": 1, b"P6": 3}
_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit image stored as a ``(height, width, channels)`` array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1) or (h, w, 3) pixels, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {px.dtype}")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))


def read_pnm(data: bytes) -> RasterImage:
    data = bytes(data)
    magic = data[:2]
    if magic not in _CHANNELS:
        raise FormatError(f"unsupported PNM magic {magic!r}; only P5 and P6 are read")
    fields, pos = [], 2
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PNM header")
        fields.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise FormatError(f"malformed PNM header fields {fields!r}") from None
    if width <= 0 or height <= 0:
        raise FormatError(f"PNM dimensions must be positive, got {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"only maxval 255 is supported, got {maxval}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("PNM header must end with a single whitespace byte")
    pos += 1
    channels = _CHANNELS[magic]
    size = width * height * channels
    body = data[pos:]
    if len(body) < size:
        raise FormatError(f"PNM raster truncated: need {size} bytes, got {len(body)}")
    if len(body) > size:
        raise FormatError(f"{len(body) - size} trailing bytes after PNM raster")
    px = np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels)
    return RasterImage(px.copy())


def write_pnm(img: RasterImage) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = magic + f"\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def _sample_rows(src: np.ndarray, m_inv: np.ndarray, rows, out_width) -> np.ndarray:
    """Bilinear samples of ``src`` for output rows ``rows``; white outside."""
    h, w, c = src.shape
    u, v = np.meshgrid(np.arange(out_width, dtype=np.float64), rows.astype(np.float64))
    q = m_inv[:, 0, None, None] * u + m_inv[:, 1, None, None] * v + m_inv[:, 2, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = q[0] / q[2]
        y = q[1] / q[2]
    valid = np.isfinite(x) & np.isfinite(y) & (x > -1) & (x < w) & (y > -1) & (y < h)
    x = np.where(valid, x, -2.0)
    y = np.where(valid, y, -2.0)

    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]

    # pad by one white pixel on every side so neighbours never go out of range
    padded = np.pad(src.astype(np.float64), ((1, 1), (1, 1), (0, 0)), constant_values=WHITE)
    xi, yi = np.clip(x0 + 1, 0, w), np.clip(y0 + 1, 0, h)
    p00 = padded[yi, xi]
    p01 = padded[yi, xi + 1]
    p10 = padded[yi + 1, xi]
    p11 = padded[yi + 1, xi + 1]
    out = (p00 * (1 - fx) + p01 * fx) * (1 - fy) + (p10 * (1 - fx) + p11 * fx) * fy
    out[~valid] = WHITE
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def warp_image(img: RasterImage, h: Homography, out_width: int, out_height: int) -> RasterImage:
    """Inverse-map every output pixel through ``invert(h)`` and sample bilinearly.

    Samples that fall off the source image read as white. Output rows are
    processed in fixed chunks, each independent of the others.
    """
    if out_width <= 0 or out_height <= 0:
        raise ValueError(f"output dimensions must be positive, got {out_width}x{out_height}")
    m_inv = invert(h).matrix
    out = np.empty((out_height, out_width, img.channels), dtype=np.uint8)
    for start in range(0, out_height, ROW_CHUNK):
        rows = np.arange(start, min(start + ROW_CHUNK, out_height))
        out[rows] = _sample_rows(img.pixels, m_inv, rows, out_width)
    return RasterImage(out)
