"""Bit generators: XORshift, logistic map, and the two chaotic-iterations PRNGs.

State vectors are rendered as integers with ``x_1`` as the most significant
bit, so ``(0, 1, 0, 0)`` is ``4``.  Strategy positions are 1-based in traces
and 0-based internally.

Every generator offers a pure-Python single-step method (``next``,
``next_state``) and a bulk method (``states`` / ``bits``) backed by a
compiled kernel.  Both walk the identical state sequence.
"""

from __future__ import annotations

import enum
import time
from bisect import bisect_right
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels

MASK32 = 0xFFFFFFFF
GOLDEN32 = 0x9E3779B9
DEFAULT_MU = 3.9999
DISCARD_CAP = _kernels.DISCARD_CAP


class DegenerateOrbitError(ArithmeticError):
    """A logistic orbit collapsed onto 0 or 1."""


class DecimationFault(RuntimeError):
    """The decimation loop exceeded its consecutive-discard cap."""


def int_to_bits(value: int, n_bits: int) -> tuple[int, ...]:
    return tuple((value >> (n_bits - 1 - i)) & 1 for i in range(n_bits))


def bits_to_int(bits: Iterable[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | (int(b) & 1)
    return value


def unpack_states(states: np.ndarray, n_bits: int) -> np.ndarray:
    """Expand N-bit state integers into a flat MSB-first uint8 bit array."""
    states = np.asarray(states, dtype=np.uint64)
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.uint64)
    return ((states[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).ravel()


def coerce_nonzero32(value: int) -> int:
    value &= MASK32
    return value if value else 1


# ---------------------------------------------------------------------------
# XORshift


def xorshift32_step(z: int) -> int:
    z ^= (z << 13) & MASK32
    z ^= z >> 17
    z ^= (z << 5) & MASK32
    return z


class XorShift32:
    """Marsaglia's 32-bit XORshift with shift triple (13, 17, 5).

    Period is 2**32 - 1 over nonzero seeds; zero is a fixed point and is
    rejected.
    """

    __slots__ = ("z",)

    def __init__(self, seed: int):
        if seed < 0 or seed > MASK32:
            raise ValueError(f"XORshift seed must fit in 32 bits, got {seed}")
        if seed == 0:
            raise ValueError("XORshift seed must be nonzero (0 is a fixed point)")
        self.z = seed

    def next(self) -> int:
        self.z = xorshift32_step(self.z)
        return self.z

    def words(self, count: int) -> np.ndarray:
        out, z = _kernels.xorshift_words(np.uint64(self.z), int(count))
        self.z = int(z)
        return out

    def bits(self, count: int) -> np.ndarray:
        """Concatenate successive 32-bit outputs MSB-first."""
        words = self.words(-(-count // 32))
        return unpack_states(words, 32)[:count]

    def uniforms(self, count: int) -> np.ndarray:
        """Floats in the open interval (0, 1)."""
        return self.words(count).astype(np.float64) / 2.0**32


# ---------------------------------------------------------------------------
# Logistic map


class LogisticMap:
    """x <- mu * x * (1 - x), kept strictly inside (0, 1)."""

    __slots__ = ("x", "mu")

    def __init__(self, x: float, mu: float = DEFAULT_MU):
        if not 0.0 < x < 1.0:
            raise ValueError(f"logistic seed must lie in (0, 1), got {x}")
        if not 3.57 < mu <= 4.0:
            raise ValueError(f"mu={mu} is outside the chaotic regime (3.57, 4]")
        self.x = float(x)
        self.mu = float(mu)

    def next(self) -> float:
        x = self.mu * self.x * (1.0 - self.x)
        if not 0.0 < x < 1.0:
            raise DegenerateOrbitError(f"logistic orbit reached {x!r}")
        self.x = x
        return x

    def bits(self, count: int) -> np.ndarray:
        """One bit per iterate: 1 when the iterate exceeds 1/2."""
        out, x, status = _kernels.logistic_bits(self.x, self.mu, int(count))
        if status != _kernels.OK:
            raise DegenerateOrbitError(f"logistic orbit reached {x!r}")
        self.x = float(x)
        return out


def logistic_seed(t: int) -> float:
    """Map an integer time seed into (0, 1) away from 0, 1/2 and 1."""
    return (t % 1_000_000 + 1) / (1_000_000 + 2)


# ---------------------------------------------------------------------------
# Selectors


class SelectorKind(str, enum.Enum):
    G1 = "g1"
    G2 = "g2"
    # degraded scheme m = y mod N, kept for comparison experiments
    MOD = "mod"


@lru_cache(maxsize=None)
def _cumulative_binomials(n: int) -> tuple[int, ...]:
    acc, out = 0, []
    for i in range(n + 1):
        acc += comb(n, i)
        out.append(acc)
    return tuple(out)


@lru_cache(maxsize=None)
def _selector_bounds(n: int) -> tuple[int, ...]:
    return tuple(-((-c << 32) >> n) for c in _cumulative_binomials(n)[:-1])


@lru_cache(maxsize=None)
def _selector_bounds_array(n: int) -> np.ndarray:
    a = np.array(_selector_bounds(n), dtype=np.uint64)
    a.flags.writeable = False
    return a


_MODE = {SelectorKind.G1: _kernels.MODE_G1, SelectorKind.G2: _kernels.MODE_G2,
         SelectorKind.MOD: _kernels.MODE_MOD}


@dataclass(frozen=True)
class Selector:
    """Maps a 32-bit draw ``y`` to the number of bits to flip this round.

    G1 returns the k with ``T[k-1] <= y / 2**32 < T[k]`` where ``T`` is the
    cumulative binomial law ``sum(C(N, i), i <= k) / 2**N``; G2 returns
    ``N - G1``.  Comparisons are exact integer arithmetic.
    """

    kind: SelectorKind
    n_bits: int

    def __post_init__(self):
        object.__setattr__(self, "kind", SelectorKind(self.kind))
        if not 2 <= self.n_bits <= 64:
            raise ValueError(f"n_bits must be in [2, 64], got {self.n_bits}")

    @property
    def thresholds(self) -> tuple[Fraction, ...]:
        n = self.n_bits
        return tuple(Fraction(c, 2**n) for c in _cumulative_binomials(n))

    @property
    def bounds(self) -> tuple[int, ...]:
        """Smallest y that no longer falls below ``T[k]``, for k < N.

        ``y / 2**32 < num / 2**N``  iff  ``y < ceil(num * 2**32 / 2**N)``.
        """
        return _selector_bounds(self.n_bits)

    @property
    def bounds_array(self) -> np.ndarray:
        return _selector_bounds_array(self.n_bits)

    @property
    def mode(self) -> int:
        return _MODE[self.kind]

    def __call__(self, y: int) -> int:
        if self.kind is SelectorKind.MOD:
            return y % self.n_bits
        m = bisect_right(self.bounds, y)
        return self.n_bits - m if self.kind is SelectorKind.G2 else m

    def map(self, y: np.ndarray) -> np.ndarray:
        """Vectorized ``__call__`` over an array of 32-bit draws."""
        y = np.asarray(y, dtype=np.uint64)
        if self.kind is SelectorKind.MOD:
            return (y % np.uint64(self.n_bits)).astype(np.int64)
        m = np.searchsorted(self.bounds_array, y, side="right").astype(np.int64)
        return self.n_bits - m if self.kind is SelectorKind.G2 else m


# ---------------------------------------------------------------------------
# New CI(XORshift, XORshift)


class NewCi:
    """Chaotic iterations driven by two XORshift streams.

    Each round draws ``y`` from ``xs_m`` and flips ``m = selector(y)``
    distinct positions of ``x`` chosen by ``xs_b``; positions already
    flipped this round are discarded (irregular decimation).  With
    ``mark=False`` the mark vector is disabled and a position may flip
    repeatedly within one round.
    """

    def __init__(self, n_bits: int, x0: int, y0: int, y0b: int,
                 selector: SelectorKind | str = SelectorKind.G1, mark: bool = True):
        if not 2 <= n_bits <= 64:
            raise ValueError(f"n_bits must be in [2, 64], got {n_bits}")
        if not 0 <= x0 < (1 << n_bits):
            raise ValueError(f"x0={x0} does not fit in {n_bits} bits")
        self.n_bits = n_bits
        self.x = x0
        self.xs_m = XorShift32(y0)
        self.xs_b = XorShift32(y0b)
        self.selector = Selector(SelectorKind(selector), n_bits)
        self.mark = mark

    # single-step path

    def _next_m(self) -> int:
        return self.selector(self.xs_m.next())

    def _next_position(self) -> int:
        """0-based position, x_1 being position 0."""
        return self.xs_b.next() % self.n_bits

    def next_state(self) -> int:
        m = self._next_m()
        top = self.n_bits - 1
        if not self.mark:
            for _ in range(m):
                self.x ^= 1 << (top - self._next_position())
            return self.x
        marks = flipped = misses = 0
        while flipped < m:
            bit = 1 << (top - self._next_position())
            if marks & bit:
                misses += 1
                if misses >= DISCARD_CAP:
                    raise DecimationFault(f"{misses} consecutive discards")
            else:
                marks |= bit
                flipped += 1
                misses = 0
        self.x ^= marks
        return self.x

    # bulk path

    def states(self, count: int) -> np.ndarray:
        out, x, z1, z2, status = _kernels.new_ci_states(
            np.uint64(self.x), np.uint64(self.xs_m.z), np.uint64(self.xs_b.z),
            np.uint64(self.n_bits), self.selector.bounds_array, self.selector.mode,
            self.mark, int(count))
        if status != _kernels.OK:
            raise DecimationFault(f"{DISCARD_CAP} consecutive discards")
        self.x, self.xs_m.z, self.xs_b.z = int(x), int(z1), int(z2)
        return out

    def bits(self, count: int) -> np.ndarray:
        """``count`` output bits, x_1 first within each state.

        The last state is truncated if ``count`` is not a multiple of N.
        """
        if count <= 0:
            return np.zeros(0, dtype=np.uint8)
        states = self.states(-(-count // self.n_bits))
        return unpack_states(states, self.n_bits)[:count]


class TraceCi(NewCi):
    """New CI fed from explicit ``m`` and 1-based position sequences.

    Reproduces hand-worked traces without reverse-engineering XORshift
    seeds.  Raises ``IndexError`` when either sequence runs out.
    """

    def __init__(self, n_bits: int, x0: int, m_seq: Sequence[int],
                 b_seq: Sequence[int], mark: bool = True):
        super().__init__(n_bits, x0, 1, 1, SelectorKind.G1, mark)
        if any(not 0 <= m <= n_bits for m in m_seq):
            raise ValueError(f"m values must lie in [0, {n_bits}]")
        if any(not 1 <= b <= n_bits for b in b_seq):
            raise ValueError(f"positions must lie in [1, {n_bits}]")
        self._m = iter(m_seq)
        self._b = iter(b_seq)

    def _next_m(self) -> int:
        try:
            return next(self._m)
        except StopIteration:
            raise IndexError("trace m sequence exhausted") from None

    def _next_position(self) -> int:
        try:
            return next(self._b) - 1
        except StopIteration:
            raise IndexError("trace b sequence exhausted") from None

    def states(self, count: int) -> np.ndarray:
        return np.array([self.next_state() for _ in range(count)], dtype=np.uint64)


# ---------------------------------------------------------------------------
# Old CI(Logistic, Logistic)


class OldCi:
    """The earlier CI generator: logistic maps pick the flip count and positions.

    Each round flips ``c + d + 1`` positions (``d`` is 1 when the first map's
    iterate exceeds 1/2), with repeats allowed.
    """

    def __init__(self, n_bits: int, x0: int, a0: float, b0: float,
                 mu: float = DEFAULT_MU, c: int | None = None):
        if not 2 <= n_bits <= 64:
            raise ValueError(f"n_bits must be in [2, 64], got {n_bits}")
        if c is None:
            c = 3 * n_bits
        if c < 3 * n_bits:
            raise ValueError(f"c must be >= 3N = {3 * n_bits}, got {c}")
        self.n_bits = n_bits
        self.c = c
        self.x = x0 & ((1 << n_bits) - 1)
        self.lm_a = LogisticMap(a0, mu)
        self.lm_b = LogisticMap(b0, mu)

    def next_state(self) -> int:
        a = self.lm_a.next()
        m = (1 if a > 0.5 else 0) + self.c
        top = self.n_bits - 1
        for _ in range(m + 1):
            b = self.lm_b.next()
            s = int(100000 * b) % self.n_bits
            self.x ^= 1 << (top - s)
        return self.x

    def states(self, count: int) -> np.ndarray:
        out, x, a, b, status = _kernels.old_ci_states(
            np.uint64(self.x), self.lm_a.x, self.lm_b.x, self.lm_a.mu,
            np.uint64(self.n_bits), self.c, int(count))
        if status != _kernels.OK:
            raise DegenerateOrbitError("logistic orbit collapsed during Old CI round")
        self.x, self.lm_a.x, self.lm_b.x = int(x), float(a), float(b)
        return out

    def bits(self, count: int) -> np.ndarray:
        if count <= 0:
            return np.zeros(0, dtype=np.uint8)
        states = self.states(-(-count // self.n_bits))
        return unpack_states(states, self.n_bits)[:count]


# ---------------------------------------------------------------------------
# Seeding


class TimeSeed(NamedTuple):
    t: int
    x0: int
    y0: int
    y0b: int


def seed_from_time(n_bits: int, now: float | None = None) -> TimeSeed:
    """Seed from the microsecond digits of the epoch time.

    ``x0 = t mod 2**N``, ``y0 = t`` and ``y0b = t ^ 0x9E3779B9``; both
    XORshift seeds are coerced to 1 if they would be zero.
    """
    if now is None:
        now = time.time()
    t = round((now % 1) * 1_000_000) % 1_000_000
    return seed_from_int(t, n_bits)


def seed_from_int(t: int, n_bits: int) -> TimeSeed:
    y0 = coerce_nonzero32(t)
    return TimeSeed(t, t % (1 << n_bits), y0, coerce_nonzero32(y0 ^ GOLDEN32))


@dataclass(frozen=True)
class CiSeed:
    """Complete parameter set of a New CI generator."""

    n_bits: int
    x0: int
    y0: int
    y0b: int
    selector: SelectorKind = SelectorKind.G1
    mark: bool = True

    @classmethod
    def from_int(cls, t: int, n_bits: int, **kw) -> "CiSeed":
        s = seed_from_int(t, n_bits)
        return cls(n_bits, s.x0, s.y0, s.y0b, **kw)

    @property
    def key_bits(self) -> int:
        """Width of the concatenated key ``x0 || y0 || y0b``."""
        return self.n_bits + 64

    def flip_bit(self, index: int) -> "CiSeed":
        """Copy with one bit of ``x0 || y0 || y0b`` inverted (index 0 = first bit of x0)."""
        if not 0 <= index < self.key_bits:
            raise IndexError(f"key bit {index} out of range [0, {self.key_bits})")
        n = self.n_bits
        if index < n:
            return replace(self, x0=self.x0 ^ (1 << (n - 1 - index)))
        index -= n
        if index < 32:
            return replace(self, y0=coerce_nonzero32(self.y0 ^ (1 << (31 - index))))
        return replace(self, y0b=coerce_nonzero32(self.y0b ^ (1 << (63 - index))))

    def make(self) -> NewCi:
        return NewCi(self.n_bits, self.x0, self.y0, self.y0b, self.selector, self.mark)


GENERATORS = ("xorshift", "logistic", "old-ci", "new-ci")


def make_generator(name: str, t: int, n_bits: int = 32,
                   selector: SelectorKind | str = SelectorKind.G1, mark: bool = True,
                   mu: float = DEFAULT_MU, c: int | None = None):
    """Build any of the four generators from one integer seed."""
    seed = seed_from_int(t, n_bits)
    if name == "xorshift":
        return XorShift32(seed.y0)
    if name == "logistic":
        return LogisticMap(logistic_seed(t), mu)
    if name == "old-ci":
        return OldCi(n_bits, seed.x0, logistic_seed(t), logistic_seed(t ^ GOLDEN32), mu, c)
    if name == "new-ci":
        return NewCi(n_bits, seed.x0, seed.y0, seed.y0b, selector, mark)
    raise ValueError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
