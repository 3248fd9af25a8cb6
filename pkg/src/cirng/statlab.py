"""Statistical evaluation of bit sequences.

The five classic tests (frequency, serial, poker, runs, autocorrelation),
their p-value machinery, linear complexity via Berlekamp-Massey, and the
experiment drivers for balance, key sensitivity and adjacent-output maps.

A bit sequence is anything ``np.asarray`` turns into a 1-d array of 0/1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bitgen import CiSeed

DEFAULT_ALPHA = 0.05
# threshold on the uniformity p-value of many aggregated p-values
UNIFORMITY_ALPHA = 0.0001

_EPS = 1e-16
_TINY = 1e-300


class InsufficientDataError(ValueError):
    """The sequence is too short for the test's validity bound."""


def as_bits(s) -> np.ndarray:
    a = np.asarray(s, dtype=np.uint8).ravel()
    if a.size and a.max() > 1:
        raise ValueError("bit sequence may only contain 0 and 1")
    return a


@dataclass(frozen=True)
class TestReport:
    test_name: str
    statistic: float
    dof: int | str
    p_value: float
    alpha: float = DEFAULT_ALPHA

    __test__ = False  # not a pytest class

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def row(self) -> dict:
        return {"test": self.test_name, "statistic": self.statistic, "dof": self.dof,
                "p_value": self.p_value, "passed": self.passed}


# ---------------------------------------------------------------------------
# p-values


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series."""
    term = total = 1.0 / a
    ap = a
    for _ in range(100_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 100_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cf(a, x))


def chi2_sf(x: float, dof: int) -> float:
    """Upper tail of the chi-square distribution, ``Q(dof/2, x/2)``."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return gammaincc(dof / 2.0, x / 2.0)


def normal_two_sided(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# The five tests


def monobit(s, alpha: float = DEFAULT_ALPHA) -> TestReport:
    s = as_bits(s)
    n = s.size
    if n < 1:
        raise InsufficientDataError("monobit needs at least 1 bit")
    n1 = int(s.sum())
    n0 = n - n1
    x1 = (n0 - n1) ** 2 / n
    return TestReport("monobit", x1, 1, chi2_sf(x1, 1), alpha)


def pair_counts(s) -> tuple[int, int, int, int]:
    """Overlapping (n00, n01, n10, n11)."""
    s = as_bits(s)
    pairs = np.bincount(2 * s[:-1] + s[1:], minlength=4)
    return tuple(int(v) for v in pairs)


def serial2(s, alpha: float = DEFAULT_ALPHA) -> TestReport:
    s = as_bits(s)
    n = s.size
    if n < 21:
        raise InsufficientDataError(f"serial test needs n >= 21, got {n}")
    n1 = int(s.sum())
    n0 = n - n1
    pairs = pair_counts(s)
    x2 = 4.0 / (n - 1) * sum(c * c for c in pairs) - 2.0 / n * (n0 * n0 + n1 * n1) + 1.0
    return TestReport("serial", x2, 2, chi2_sf(x2, 2), alpha)


def poker(s, m: int = 8, alpha: float = DEFAULT_ALPHA) -> TestReport:
    s = as_bits(s)
    if m < 1:
        raise ValueError("poker block length must be >= 1")
    k = s.size // m
    if k < 5 * 2**m:
        raise InsufficientDataError(
            f"poker test with m={m} needs n >= {5 * 2**m * m} bits, got {s.size}")
    blocks = s[: k * m].reshape(k, m).astype(np.int64)
    values = blocks @ (1 << np.arange(m - 1, -1, -1, dtype=np.int64))
    counts = np.bincount(values, minlength=2**m)
    x3 = 2**m / k * float(np.dot(counts, counts)) - k
    return TestReport("poker", x3, 2**m - 1, chi2_sf(x3, 2**m - 1), alpha)


def run_lengths(s) -> tuple[np.ndarray, np.ndarray]:
    """Lengths of the runs of ones (blocks) and runs of zeros (gaps)."""
    s = as_bits(s)
    if s.size == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    edges = np.flatnonzero(np.diff(s)) + 1
    starts = np.concatenate(([0], edges))
    lengths = np.diff(np.concatenate((starts, [s.size])))
    values = s[starts]
    return lengths[values == 1], lengths[values == 0]


def runs_expected(n: int, i: int) -> float:
    return (n - i + 3) / 2 ** (i + 2)


def runs_k(n: int) -> int:
    k = 0
    while runs_expected(n, k + 1) >= 5:
        k += 1
    return k


def runs(s, alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Runs test; runs longer than k share bucket k.

    The expected count of bucket k is the tail sum of ``e_i`` for ``i >= k``
    so observed and expected totals refer to the same category.
    """
    s = as_bits(s)
    n = s.size
    if n < 38:
        raise InsufficientDataError(f"runs test needs n >= 38, got {n}")
    k = runs_k(n)
    if k < 2:
        raise InsufficientDataError(f"runs test needs n >= 79 for a nonzero dof, got {n}")
    e = np.array([runs_expected(n, i) for i in range(1, k + 1)])
    # terms beyond ~1000 are below double precision
    tail = np.arange(k, min(n, k + 1000) + 1, dtype=np.float64)
    e[-1] = float(np.sum((n - tail + 3) / np.exp2(tail + 2)))
    x4 = 0.0
    for lengths in run_lengths(s):
        observed = np.bincount(np.minimum(lengths, k), minlength=k + 1)[1:]
        x4 += float(np.sum((observed - e) ** 2 / e))
    dof = 2 * k - 2
    return TestReport("runs", x4, dof, chi2_sf(x4, dof), alpha)


def autocorr(s, d: int = 8, alpha: float = DEFAULT_ALPHA) -> TestReport:
    s = as_bits(s)
    n = s.size
    if not 1 <= d <= n // 2:
        raise InsufficientDataError(f"shift d={d} must lie in [1, {n // 2}]")
    if n - d < 10:
        raise InsufficientDataError(f"autocorrelation needs n - d >= 10, got {n - d}")
    a = int(np.count_nonzero(s[:-d] ^ s[d:]))
    x5 = abs(2 * (a - (n - d) / 2) / math.sqrt(n - d))
    return TestReport("autocorrelation", x5, "normal", normal_two_sided(x5), alpha)


BATTERY = {
    "monobit": monobit,
    "serial": serial2,
    "poker": poker,
    "runs": runs,
    "autocorrelation": autocorr,
}


def battery(s, alpha: float = DEFAULT_ALPHA, poker_m: int = 8, autocorr_d: int = 8,
            tests: Sequence[str] = tuple(BATTERY)) -> list[TestReport | InsufficientDataError]:
    """Run the selected tests; a bound violation is returned in place of its report."""
    out = []
    for name in tests:
        fn = BATTERY[name]
        kw = {"m": poker_m} if name == "poker" else {"d": autocorr_d} if name == "autocorrelation" else {}
        try:
            out.append(fn(s, alpha=alpha, **kw))
        except InsufficientDataError as exc:
            out.append(exc)
    return out


# ---------------------------------------------------------------------------
# Linear complexity


def _to_int(s: np.ndarray) -> int:
    """Pack bits so that bit i of the integer is s[i]."""
    return int.from_bytes(np.packbits(s[::-1]).tobytes(), "big") >> ((-s.size) % 8)


def lc_profile(s) -> np.ndarray:
    """Linear complexity of every prefix: entry i is LC(s[:i]), entry 0 is 0.

    Berlekamp-Massey over GF(2) with connection polynomials held as Python
    integers (bit j = coefficient of D**j).
    """
    s = as_bits(s)
    n = s.size
    profile = np.zeros(n + 1, dtype=np.int64)
    # reversed window: bit j of `rev` holds s[i - j] after step i
    c, b = 1, 1
    length, shift = 0, 1
    rev = 0
    for i in range(n):
        rev = (rev << 1) | int(s[i])
        # discrepancy = sum_j c_j * s[i - j]
        if bin(c & rev).count("1") & 1:
            t = c
            c ^= b << shift
            if 2 * length <= i:
                length = i + 1 - length
                b = t
                shift = 1
            else:
                shift += 1
        else:
            shift += 1
        profile[i + 1] = length
    return profile


def berlekamp_massey(s) -> int:
    s = as_bits(s)
    if s.size < 1:
        raise ValueError("linear complexity of an empty sequence is undefined")
    return int(lc_profile(s)[-1])


# ---------------------------------------------------------------------------
# Experiments


def hamming(a, b) -> int:
    a, b = as_bits(a), as_bits(b)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return int(np.count_nonzero(a ^ b))


def balance_percent(s) -> float:
    s = as_bits(s)
    ones = int(s.sum())
    return 100.0 * abs(ones - (s.size - ones)) / s.size


def balance_experiment(gen_factory: Callable[[int, bool], object], num_seqs: int,
                       seq_len: int, decimated: bool = True) -> np.ndarray:
    """Per-sequence ``|#1 - #0| / n`` in percent.

    ``gen_factory(run_index, decimated)`` returns a fresh generator with a
    ``bits(count)`` method; results are ordered by run index.
    """
    if num_seqs < 1 or seq_len < 1:
        raise ValueError("num_seqs and seq_len must be positive")
    return np.array([balance_percent(gen_factory(i, decimated).bits(seq_len))
                     for i in range(num_seqs)])


def key_sensitivity(params: CiSeed, flipped_bit_index: int, seq_len: int) -> float:
    """Variance ratio ``P = H / n`` between streams whose keys differ in one bit.

    ``flipped_bit_index`` addresses ``x0 || y0 || y0b``.  Flipping a bit of
    ``x0`` only ever differs in that one output position per state (the
    strategy does not depend on ``x``), so P = 1/N there; bits of the
    XORshift seeds give the full avalanche.
    """
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    a = params.make().bits(seq_len)
    b = params.flip_bit(flipped_bit_index).make().bits(seq_len)
    return hamming(a, b) / seq_len


def pair_intensity(states, n_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """(2**N x 2**N adjacent-pair counts, 2**N value histogram)."""
    if n_bits > 16:
        raise ValueError(f"pair intensity needs N <= 16, got {n_bits}")
    size = 1 << n_bits
    v = np.asarray(states, dtype=np.int64)
    if v.size and (v.min() < 0 or v.max() >= size):
        raise ValueError(f"state values exceed {n_bits} bits")
    hist = np.bincount(v, minlength=size)
    pairs = np.bincount(v[:-1] * size + v[1:], minlength=size * size).reshape(size, size)
    return pairs, hist


def uniformity_chi2(counts) -> TestReport:
    """Chi-square goodness of fit of a histogram against the uniform law."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = counts.sum() / counts.size
    x = float(np.sum((counts - expected) ** 2) / expected)
    dof = counts.size - 1
    return TestReport("uniformity", x, dof, chi2_sf(x, dof), UNIFORMITY_ALPHA)


def goodness_of_fit(counts, probs, alpha: float = DEFAULT_ALPHA) -> TestReport:
    counts = np.asarray(counts, dtype=np.float64)
    expected = counts.sum() * np.asarray(probs, dtype=np.float64)
    x = float(np.sum((counts - expected) ** 2 / expected))
    dof = counts.size - 1
    return TestReport("goodness-of-fit", x, dof, chi2_sf(x, dof), alpha)
