"""Chaos-based watermarking: mixing, LSC selection, embedding and extraction.

The payload travels through two keyed stages driven by the New CI
generator:

* mixing, either a plain XOR with the keystream or chaotic iterations of
  the vectorial negation on the watermark itself;
* embedding into least significant coefficients picked by the strategy
  ``U[n+1] = S[n+1] + 2 U[n] + n (mod M)``, in switch or substitution mode.

With authentication on, both PRNG streams are reseeded from a digest of
the most significant coefficients, so any change to those bits scrambles
the extracted watermark.
"""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass, replace

import numpy as np

from .bitgen import MASK32, NewCi, coerce_nonzero32
from .imagery import BitImage, BitPlaneSpec, GrayImage, extract_plane, replace_plane

# XOR-ed into y0b so the position stream differs from the mixing stream
STRATEGY_TWEAK = 0x85EBCA6B


class MixMode(str, enum.Enum):
    XOR = "xor"
    CHAOTIC = "ci"


class EmbedMode(str, enum.Enum):
    SWITCH = "switch"
    SUBSTITUTE = "subst"


class CapacityError(ValueError):
    """The watermark has more bits than the carrier has LSCs."""


class KeyFormatError(ValueError):
    pass


@dataclass(frozen=True)
class StegoKey:
    x0: int
    y0: int
    y0b: int
    n_bits: int = 64
    mix_mode: MixMode = MixMode.CHAOTIC
    embed_mode: EmbedMode = EmbedMode.SUBSTITUTE
    authenticated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mix_mode", MixMode(self.mix_mode))
        object.__setattr__(self, "embed_mode", EmbedMode(self.embed_mode))
        object.__setattr__(self, "y0", coerce_nonzero32(self.y0))
        object.__setattr__(self, "y0b", coerce_nonzero32(self.y0b))
        if not 2 <= self.n_bits <= 64:
            raise ValueError(f"n_bits must be in [2, 64], got {self.n_bits}")
        object.__setattr__(self, "x0", self.x0 & ((1 << self.n_bits) - 1))

    @classmethod
    def from_seed(cls, seed: int, **kw) -> "StegoKey":
        """Spread one integer over the three seeds (splitmix64 finalizer)."""
        words = []
        z = seed & 0xFFFFFFFFFFFFFFFF
        for _ in range(2):
            z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
            v = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
            v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
            words.append(v ^ (v >> 31))
        return cls(x0=words[0], y0=words[1] & MASK32, y0b=words[1] >> 32, **kw)

    def format(self) -> str:
        return (f"x0={self.x0:x} y0={self.y0} y0b={self.y0b} n={self.n_bits} "
                f"mix={self.mix_mode.value} mode={self.embed_mode.value} "
                f"auth={int(self.authenticated)}")

    @classmethod
    def parse(cls, text: str) -> "StegoKey":
        fields = dict(re.findall(r"(\w+)=(\S+)", text))
        missing = {"x0", "y0", "y0b", "n", "mix", "mode", "auth"} - fields.keys()
        if missing:
            raise KeyFormatError(f"key is missing fields: {', '.join(sorted(missing))}")
        try:
            return cls(x0=int(fields["x0"], 16), y0=int(fields["y0"]), y0b=int(fields["y0b"]),
                       n_bits=int(fields["n"]), mix_mode=fields["mix"],
                       embed_mode=fields["mode"], authenticated=fields["auth"] == "1")
        except ValueError as exc:
            raise KeyFormatError(str(exc)) from exc

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as f:
            f.write(self.format() + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "StegoKey":
        with open(path) as f:
            return cls.parse(f.read())


@dataclass(frozen=True)
class WatermarkResult:
    watermark: BitImage
    similarity: float | None = None


def key_prng(key: StegoKey, msc_digest: int = 0, stream: int = 0) -> NewCi:
    """The New CI instance for one stage (0 = mixing, 1 = strategy)."""
    y0 = coerce_nonzero32(key.y0 ^ (msc_digest & MASK32))
    y0b = key.y0b ^ (msc_digest >> 32) & MASK32
    if stream:
        y0b ^= STRATEGY_TWEAK * stream
    return NewCi(key.n_bits, key.x0, y0, coerce_nonzero32(y0b))


def msc_digest(msc_bits) -> int:
    """XOR fold of the bit-plane in 64-bit chunks (MSB-first, zero padded)."""
    bits = np.asarray(msc_bits, dtype=np.uint8).ravel()
    if bits.size == 0:
        return 0
    padded = np.zeros(-(-bits.size // 64) * 64, dtype=np.uint8)
    padded[: bits.size] = bits
    words = np.frombuffer(np.packbits(padded).tobytes(), dtype=">u8")
    return int(np.bitwise_xor.reduce(words))


# ---------------------------------------------------------------------------
# Mixing


def mix_xor(w, key: StegoKey, msc_digest: int = 0) -> np.ndarray:
    w = np.asarray(w, dtype=np.uint8).ravel()
    return w ^ key_prng(key, msc_digest).bits(w.size)


def chaotic_positions(key: StegoKey, size: int, iterations: int, msc_digest: int = 0) -> np.ndarray:
    return key_prng(key, msc_digest).states(iterations) % np.uint64(size)


def mix_chaotic(w, key: StegoKey, iterations: int | None = None, msc_digest: int = 0) -> np.ndarray:
    """Chaotic iterations of the negation, starting from the watermark.

    Iteration k negates the component picked by the k-th PRNG state reduced
    mod ``len(w)``.  The result depends only on each component's flip
    parity, so applying it again with the same key undoes it.
    """
    w = np.asarray(w, dtype=np.uint8).ravel()
    if w.size < 1:
        raise ValueError("cannot mix an empty watermark")
    if iterations is None:
        iterations = 2 * w.size
    pos = chaotic_positions(key, w.size, iterations, msc_digest)
    parity = (np.bincount(pos.astype(np.int64), minlength=w.size) & 1).astype(np.uint8)
    return w ^ parity


demix_chaotic = mix_chaotic


def mix(w, key: StegoKey, msc_digest: int = 0) -> np.ndarray:
    if key.mix_mode is MixMode.XOR:
        return mix_xor(w, key, msc_digest)
    return mix_chaotic(w, key, msc_digest=msc_digest)


demix = mix


# ---------------------------------------------------------------------------
# Strategy


def build_strategy_u(key: StegoKey, count: int, modulus: int, msc_digest: int = 0,
                     distinct: bool = True, states=None) -> np.ndarray:
    """LSC indices ``U`` with ``U[0] = S[0]`` and ``U[n+1] = S[n+1] + 2 U[n] + n``.

    ``S`` is the sequence of New CI states; all arithmetic is mod
    ``modulus``.  With ``distinct`` the recurrence runs unchanged but terms
    revisiting an index already taken are skipped, so the first ``count``
    kept indices are pairwise different.  ``states`` overrides the PRNG.
    """
    if modulus < 1:
        raise ValueError("modulus must be >= 1")
    if count < 0:
        raise ValueError("count must be >= 0")
    if distinct and count > modulus:
        raise CapacityError(f"{count} distinct indices requested from {modulus}")
    if count == 0:
        return np.zeros(0, dtype=np.int64)

    if states is not None:
        source = iter(int(s) for s in states)
    else:
        prng = key_prng(key, msc_digest, stream=1)

        def pull():
            while True:
                yield from (int(s) for s in prng.states(max(64, count // 4)))

        source = pull()

    out = []
    seen = set()
    u = None
    n = 0
    for s in source:
        u = s % modulus if u is None else (s + 2 * u + n - 1) % modulus
        n += 1
        if distinct:
            if u in seen:
                continue
            seen.add(u)
        out.append(u)
        if len(out) == count:
            break
    if len(out) < count:
        raise ValueError(f"state sequence ran out after {len(out)} of {count} indices")
    return np.array(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# Embedding and extraction


def _digest_of(image: GrayImage, key: StegoKey, plane: BitPlaneSpec) -> int:
    if not key.authenticated:
        return 0
    return msc_digest(extract_plane(image, plane.msc_bits))


def embed(cover: GrayImage, w: BitImage, key: StegoKey,
          plane: BitPlaneSpec = BitPlaneSpec()) -> GrayImage:
    """Hide ``w`` in the LSCs of ``cover``; MSC bits are left untouched.

    SUBSTITUTE writes mixed bit k into LSC ``U[k]``.  SWITCH negates LSC
    ``U[k]`` when mixed bit k is 1, so the cover is needed to read it back.
    """
    lsc = extract_plane(cover, plane.lsc_bits)
    payload = w.flat() if isinstance(w, BitImage) else np.asarray(w, np.uint8).ravel()
    if payload.size > lsc.size:
        raise CapacityError(f"watermark of {payload.size} bits exceeds capacity {lsc.size}")
    digest = _digest_of(cover, key, plane)
    mixed = mix(payload, key, digest)
    u = build_strategy_u(key, payload.size, lsc.size, digest)
    if key.embed_mode is EmbedMode.SUBSTITUTE:
        lsc[u] = mixed
    else:
        np.bitwise_xor.at(lsc, u, mixed)
    return replace_plane(cover, plane.lsc_bits, lsc)


def restore_cover(stego: GrayImage, w: BitImage, key: StegoKey,
                  plane: BitPlaneSpec = BitPlaneSpec()) -> GrayImage:
    """Replay switch-mode iterations on a marked image to get the cover back."""
    if key.embed_mode is not EmbedMode.SWITCH:
        raise ValueError("only switch-mode embedding can be undone")
    return embed(stego, w, key, plane)


def similarity(a, b) -> float:
    """Percentage of equal bits."""
    a = a.bits if isinstance(a, BitImage) else np.asarray(a, dtype=np.uint8)
    b = b.bits if isinstance(b, BitImage) else np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return 100.0 * np.count_nonzero(a == b) / a.size


def extract(image: GrayImage, key: StegoKey, plane: BitPlaneSpec = BitPlaneSpec(),
            w_dims: tuple[int, int] = (64, 64), original: GrayImage | None = None,
            reference: BitImage | None = None) -> WatermarkResult:
    """Rebuild the watermark of size ``w_dims = (width, height)``.

    Switch mode is non-blind and needs ``original``.  When ``reference`` is
    given the similarity to it is filled in.
    """
    width, height = w_dims
    count = width * height
    if key.embed_mode is EmbedMode.SWITCH and original is None:
        raise ValueError("switch-mode extraction requires the original cover")
    lsc = extract_plane(image, plane.lsc_bits)
    if count > lsc.size:
        raise CapacityError(f"watermark of {count} bits exceeds capacity {lsc.size}")
    digest = _digest_of(image, key, plane)
    u = build_strategy_u(key, count, lsc.size, digest)
    if key.embed_mode is EmbedMode.SWITCH:
        if (original.width, original.height) != (image.width, image.height):
            raise ValueError("original and marked images differ in size")
        mixed = (lsc ^ extract_plane(original, plane.lsc_bits))[u]
    else:
        mixed = lsc[u]
    mark = BitImage.from_flat(demix(mixed, key, digest), width, height)
    score = similarity(mark, reference) if reference is not None else None
    return WatermarkResult(mark, score)


def with_auth(key: StegoKey, authenticated: bool) -> StegoKey:
    return replace(key, authenticated=authenticated)
