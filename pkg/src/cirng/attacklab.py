"""Image attacks used to probe watermark robustness.

All attacks return a new image of the same size and are deterministic
(Gaussian noise given its seed).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bitgen import XorShift32, coerce_nonzero32
from .imagery import GrayImage


class AttackKind(str, enum.Enum):
    CROP = "crop"
    ROTATE = "rotate"
    JPEG = "jpeg"
    GAUSS = "gauss"


@dataclass(frozen=True)
class AttackSpec:
    """One attack at one intensity (crop size, angle, JPEG quality or sigma)."""

    kind: AttackKind
    intensity: float
    noise_seed: int = 0x5EED

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.kind is AttackKind.JPEG and not 0 < self.intensity <= 100:
            raise ValueError(f"JPEG quality must be in (0, 100], got {self.intensity}")
        if self.kind in (AttackKind.GAUSS, AttackKind.CROP) and self.intensity < 0:
            raise ValueError(f"{self.kind.value} intensity must be >= 0")

    def apply(self, img: GrayImage) -> GrayImage:
        if self.kind is AttackKind.CROP:
            return crop_center(img, int(self.intensity))
        if self.kind is AttackKind.ROTATE:
            return rotate_roundtrip(img, self.intensity)
        if self.kind is AttackKind.JPEG:
            return jpeg_like(img, int(self.intensity))
        return gaussian_noise(img, self.intensity, self.noise_seed)


# ---------------------------------------------------------------------------
# Zeroing


def crop_zero(img: GrayImage, x: int, y: int, w: int, h: int) -> GrayImage:
    """Zero the ``w`` x ``h`` rectangle whose top-left pixel is (x, y)."""
    if min(x, y, w, h) < 0 or x + w > img.width or y + h > img.height:
        raise ValueError(f"rectangle ({x}, {y}, {w}, {h}) exceeds {img.width}x{img.height}")
    out = img.pixels.copy()
    out[y:y + h, x:x + w] = 0
    return GrayImage(out)


def crop_center(img: GrayImage, size: int) -> GrayImage:
    """Zero a centred ``size`` x ``size`` square."""
    return crop_zero(img, (img.width - size) // 2, (img.height - size) // 2, size, size)


# ---------------------------------------------------------------------------
# Rotation


def _rotate(p: np.ndarray, theta: float, bilinear: bool) -> np.ndarray:
    h, w = p.shape
    # pixel centres sit at half-integers, so the frame centre is (w/2, h/2)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    c, s = math.cos(theta), math.sin(theta)
    # inverse map: source = R(-theta) (dest - centre) + centre
    sx = c * (xx - cx) + s * (yy - cy) + cx
    sy = -s * (xx - cx) + c * (yy - cy) + cy
    src = p.astype(np.float64)
    if not bilinear:
        ix, iy = np.rint(sx).astype(np.int64), np.rint(sy).astype(np.int64)
        inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        out = np.zeros_like(src)
        out[inside] = src[iy[inside], ix[inside]]
        return out
    x0, y0 = np.floor(sx).astype(np.int64), np.floor(sy).astype(np.int64)
    fx, fy = sx - x0, sy - y0
    out = np.zeros_like(src)
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            px, py = x0 + dx, y0 + dy
            inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
            out[inside] += (wx * wy)[inside] * src[py[inside], px[inside]]
    return out


def rotate_roundtrip(img: GrayImage, theta_deg: float, bilinear: bool = False) -> GrayImage:
    """Rotate by ``theta`` about the image centre, then by ``-theta``.

    Nearest-neighbour resampling by default; pixels mapped from outside the
    frame become 0.
    """
    theta = math.radians(theta_deg)
    once = _rotate(img.pixels, theta, bilinear)
    if not bilinear:
        once = once.astype(np.uint8)
    back = _rotate(once, -theta, bilinear)
    return GrayImage(np.clip(np.rint(back), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# JPEG-like compression

LUMINANCE_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)


def _dct_matrix(n: int = 8) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    m[0] /= np.sqrt(2.0)
    return m


DCT8 = _dct_matrix()


def quant_table(quality: int) -> np.ndarray:
    """Luminance table scaled by the IJG quality rule; quality 100 gives all ones."""
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    scale = 5000 / quality if quality < 50 else 200 - 2 * quality
    return np.clip(np.floor((LUMINANCE_TABLE * scale + 50) / 100), 1, 255)


def jpeg_like(img: GrayImage, level: int, table: np.ndarray | None = None) -> GrayImage:
    """Blockwise 8x8 DCT, quantize, dequantize, inverse DCT.

    ``level`` is the IJG quality factor (1 = harshest, 100 = near-lossless).
    Edges are padded by replication to whole blocks and cropped afterwards.
    """
    q = quant_table(level) if table is None else np.asarray(table, dtype=np.float64)
    h, w = img.pixels.shape
    ph, pw = -h % 8, -w % 8
    p = np.pad(img.pixels.astype(np.float64) - 128.0, ((0, ph), (0, pw)), mode="edge")
    H, W = p.shape
    blocks = p.reshape(H // 8, 8, W // 8, 8).transpose(0, 2, 1, 3)
    coef = DCT8 @ blocks @ DCT8.T
    coef = np.rint(coef / q) * q
    rec = (DCT8.T @ coef @ DCT8).transpose(0, 2, 1, 3).reshape(H, W)
    out = np.clip(np.rint(rec + 128.0), 0, 255)[:h, :w]
    return GrayImage(out.astype(np.uint8))


# ---------------------------------------------------------------------------
# Gaussian noise


def gaussian_field(shape: tuple[int, int], sigma: float, seed: int) -> np.ndarray:
    """Box-Muller normals scaled by ``sigma``, from a seeded XORshift stream."""
    n = int(np.prod(shape))
    folded = coerce_nonzero32((seed ^ (seed >> 32)) & 0xFFFFFFFF)
    u = XorShift32(folded).uniforms(2 * (-(-n // 2)))
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate((r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)))
    return sigma * z[:n].reshape(shape)


def gaussian_noise(img: GrayImage, sigma: float, seed: int = 0x5EED) -> GrayImage:
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return GrayImage(img.pixels.copy())
    noisy = img.pixels + gaussian_field(img.pixels.shape, sigma, seed)
    return GrayImage(np.clip(np.rint(noisy), 0, 255).astype(np.uint8))
