"""Grayscale and bilevel images, bit-plane access, and binary Netpbm I/O."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


class NetpbmError(ValueError):
    """Malformed or unsupported Netpbm file."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, ``pixels`` shaped (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.size == 0:
            raise ValueError(f"expected a non-empty 2-d raster, got shape {p.shape}")
        if p.dtype != np.uint8:
            if p.min() < 0 or p.max() > 255:
                raise ValueError("gray levels must lie in [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class BitImage:
    """Bilevel raster, ``bits`` shaped (height, width) with values 0/1."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.size == 0:
            raise ValueError(f"expected a non-empty 2-d raster, got shape {b.shape}")
        b = b.astype(np.uint8)
        if b.max() > 1:
            raise ValueError("bit image values must be 0 or 1")
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def flat(self) -> np.ndarray:
        return self.bits.ravel()

    @classmethod
    def from_flat(cls, bits, width: int, height: int) -> "BitImage":
        return cls(np.asarray(bits, dtype=np.uint8).reshape(height, width))

    def __eq__(self, other):
        return isinstance(other, BitImage) and np.array_equal(self.bits, other.bits)


def _bit_set(bits: Iterable[int]) -> frozenset[int]:
    s = frozenset(int(b) for b in bits)
    if any(not 0 <= b <= 7 for b in s):
        raise ValueError(f"bit indices must lie in 0..7, got {sorted(s)}")
    return s


@dataclass(frozen=True)
class BitPlaneSpec:
    """Which pixel bits carry the authentication key (MSC) and the payload (LSC).

    Bit 3 belongs to neither plane by default.
    """

    msc_bits: frozenset[int] = field(default_factory=lambda: frozenset({7, 6, 5, 4}))
    lsc_bits: frozenset[int] = field(default_factory=lambda: frozenset({2, 1, 0}))

    def __post_init__(self):
        msc, lsc = _bit_set(self.msc_bits), _bit_set(self.lsc_bits)
        if msc & lsc:
            raise ValueError(f"bits {sorted(msc & lsc)} cannot be both MSC and LSC")
        if not lsc:
            raise ValueError("at least one LSC bit is required")
        object.__setattr__(self, "msc_bits", msc)
        object.__setattr__(self, "lsc_bits", lsc)

    def capacity(self, image: GrayImage) -> int:
        return len(self.lsc_bits) * image.width * image.height


def _ordered(bits) -> np.ndarray:
    return np.array(sorted(_bit_set(bits), reverse=True), dtype=np.uint8)


def extract_plane(image: GrayImage, bits) -> np.ndarray:
    """Selected bits, pixel-major (row-major pixels) and high bit first within a pixel."""
    order = _ordered(bits)
    flat = image.pixels.ravel()
    return ((flat[:, None] >> order) & 1).astype(np.uint8).ravel()


def replace_plane(image: GrayImage, bits, data) -> GrayImage:
    """Inverse of :func:`extract_plane` on the selected bits; other bits are kept."""
    order = _ordered(bits)
    data = np.asarray(data, dtype=np.uint8).ravel()
    flat = image.pixels.ravel()
    if data.size != order.size * flat.size:
        raise ValueError(f"plane data has {data.size} bits, expected {order.size * flat.size}")
    mask = np.uint8(sum(1 << int(b) for b in order))
    packed = (data.reshape(flat.size, order.size) << order).sum(axis=1, dtype=np.uint16)
    out = (flat & ~mask) | packed.astype(np.uint8)
    return GrayImage(out.reshape(image.pixels.shape))


# ---------------------------------------------------------------------------
# Netpbm

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _parse_header(data: bytes, magic: bytes, n_fields: int) -> tuple[list[int], bytes]:
    if data[:2] != magic:
        raise NetpbmError(f"expected magic {magic.decode()}, got {data[:2]!r}")
    pos, values = 2, []
    for _ in range(n_fields):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise NetpbmError("truncated header")
        try:
            values.append(int(m.group(1)))
        except ValueError:
            raise NetpbmError(f"non-numeric header field {m.group(1)!r}") from None
        pos = m.end()
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise NetpbmError("header must end with a single whitespace byte")
    if any(v <= 0 for v in values):
        raise NetpbmError(f"header values must be positive, got {values}")
    return values, data[pos + 1:]


def decode_pgm(data: bytes) -> GrayImage:
    (width, height, maxval), payload = _parse_header(data, b"P5", 3)
    if maxval != 255:
        raise NetpbmError(f"only maxval 255 is supported, got {maxval}")
    need = width * height
    if len(payload) < need:
        raise NetpbmError(f"truncated payload: {len(payload)} of {need} bytes")
    return GrayImage(np.frombuffer(payload[:need], dtype=np.uint8).reshape(height, width).copy())


def encode_pgm(image: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (image.width, image.height) + image.pixels.tobytes()


def decode_pbm(data: bytes) -> BitImage:
    (width, height), payload = _parse_header(data, b"P4", 2)
    row_bytes = (width + 7) // 8
    need = row_bytes * height
    if len(payload) < need:
        raise NetpbmError(f"truncated payload: {len(payload)} of {need} bytes")
    rows = np.frombuffer(payload[:need], dtype=np.uint8).reshape(height, row_bytes)
    return BitImage(np.unpackbits(rows, axis=1)[:, :width])


def encode_pbm(image: BitImage) -> bytes:
    # rows are padded to whole bytes; 1 is black
    body = np.packbits(image.bits, axis=1).tobytes()
    return b"P4\n%d %d\n" % (image.width, image.height) + body


def read_pgm(path: str | os.PathLike) -> GrayImage:
    with open(path, "rb") as f:
        return decode_pgm(f.read())


def write_pgm(path: str | os.PathLike, image: GrayImage) -> None:
    with open(path, "wb") as f:
        f.write(encode_pgm(image))


def read_pbm(path: str | os.PathLike) -> BitImage:
    with open(path, "rb") as f:
        return decode_pbm(f.read())


def write_pbm(path: str | os.PathLike, image: BitImage) -> None:
    with open(path, "wb") as f:
        f.write(encode_pbm(image))


def synthetic_cover(size: int = 256, seed: int = 1) -> GrayImage:
    """Smooth, deterministic stand-in for a photographic carrier.

    A blend of low-frequency gradients and blobs plus mild texture, so that
    attacks behave as on natural images (MSCs vary slowly, LSCs are busy).
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = 90 + 60 * xx + 40 * np.sin(3 * np.pi * yy) * np.cos(2 * np.pi * xx)
    for _ in range(6):
        cx, cy, r = rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.2)
        img += rng.uniform(-50, 50) * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * r * r))
    img += rng.normal(0, 4, img.shape)
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def synthetic_watermark(size: int = 64) -> BitImage:
    """Deterministic bilevel logo: a ring with a diagonal bar."""
    yy, xx = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2
    r = np.hypot(xx - c, yy - c)
    ring = (r > size * 0.28) & (r < size * 0.42)
    bar = np.abs(xx - yy) < size * 0.08
    return BitImage((ring | bar).astype(np.uint8))
