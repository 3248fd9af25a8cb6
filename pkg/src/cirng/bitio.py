"""Bit file formats.

ASCII: characters '0'/'1', a newline after every 64 bits.
Packed: bytes, most significant bit first; the last byte is zero padded.
NIST: one unbroken line of '0'/'1' characters (the external suite's
epsilon format).
"""

from __future__ import annotations

import os

import numpy as np

ASCII_WIDTH = 64
_ASCII_BYTES = frozenset(b"01 \t\r\n")


def to_ascii(bits, width: int | None = ASCII_WIDTH) -> bytes:
    chars = (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes()
    if not width:
        return chars
    lines = [chars[i:i + width] for i in range(0, len(chars), width)]
    return b"".join(line + b"\n" for line in lines)


def from_ascii(data: bytes) -> np.ndarray:
    raw = np.frombuffer(bytes(data.translate(None, b" \t\r\n")), dtype=np.uint8)
    if raw.size and (raw.min() < ord("0") or raw.max() > ord("1")):
        raise ValueError("ASCII bit file may only contain '0', '1' and whitespace")
    return raw - ord("0")


def to_packed(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def from_packed(data: bytes, count: int | None = None) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    return bits if count is None else bits[:count]


def sniff_format(data: bytes) -> str:
    return "ascii" if set(data) <= _ASCII_BYTES else "packed"


def write_bits(path: str | os.PathLike, bits, fmt: str = "ascii") -> None:
    if fmt == "ascii":
        payload = to_ascii(bits)
    elif fmt == "packed":
        payload = to_packed(bits)
    elif fmt == "nist":
        payload = to_ascii(bits, width=None)
    else:
        raise ValueError(f"unknown bit format {fmt!r}")
    try:
        with open(path, "wb") as f:
            f.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write bit file {os.fspath(path)}: {exc.strerror}") from exc


def read_bits(path: str | os.PathLike, fmt: str = "auto") -> np.ndarray:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise OSError(f"cannot read bit file {os.fspath(path)}: {exc.strerror}") from exc
    if fmt == "auto":
        fmt = sniff_format(data)
    if fmt in ("ascii", "nist"):
        return from_ascii(data)
    if fmt == "packed":
        return from_packed(data)
    raise ValueError(f"unknown bit format {fmt!r}")
