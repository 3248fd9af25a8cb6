"""Compiled inner loops for bulk generation.

Every kernel mirrors a pure-Python step method in :mod:`cirng.bitgen`; the
test suite checks the two paths against each other.  All integer state is
carried as ``uint64`` so numba never promotes a mixed signed/unsigned
expression to float.
"""

import numpy as np
from numba import njit

U0 = np.uint64(0)
U1 = np.uint64(1)
M32 = np.uint64(0xFFFFFFFF)
S13 = np.uint64(13)
S17 = np.uint64(17)
S5 = np.uint64(5)

MODE_G1 = 0
MODE_G2 = 1
MODE_MOD = 2

# consecutive discards tolerated before a round is declared livelocked
DISCARD_CAP = 1 << 20

OK = 0
FAULT_DISCARD = 1
FAULT_DEGENERATE = 2


@njit(cache=True, inline="always")
def _xs(z):
    z ^= (z << S13) & M32
    z ^= z >> S17
    z ^= (z << S5) & M32
    return z


@njit(cache=True, inline="always")
def _select(y, bounds, n, mode):
    if mode == MODE_MOD:
        return y % n
    lo = 0
    hi = bounds.shape[0]
    # number of upper bounds <= y
    while lo < hi:
        mid = (lo + hi) // 2
        if bounds[mid] <= y:
            lo = mid + 1
        else:
            hi = mid
    m = np.uint64(lo)
    if mode == MODE_G2:
        m = n - m
    return m


@njit(cache=True)
def xorshift_words(z, count):
    out = np.empty(count, dtype=np.uint64)
    for i in range(count):
        z = _xs(z)
        out[i] = z
    return out, z


@njit(cache=True)
def new_ci_states(x, z1, z2, n, bounds, mode, mark, count):
    out = np.empty(count, dtype=np.uint64)
    top = n - U1
    for i in range(count):
        z1 = _xs(z1)
        m = _select(z1, bounds, n, mode)
        if mark:
            marks = U0
            flipped = U0
            misses = 0
            while flipped < m:
                z2 = _xs(z2)
                bit = U1 << (top - z2 % n)
                if marks & bit:
                    misses += 1
                    if misses >= DISCARD_CAP:
                        return out, x, z1, z2, FAULT_DISCARD
                else:
                    marks |= bit
                    flipped += U1
                    misses = 0
            x ^= marks
        else:
            for _ in range(m):
                z2 = _xs(z2)
                x ^= U1 << (top - z2 % n)
        out[i] = x
    return out, x, z1, z2, OK


@njit(cache=True)
def old_ci_states(x, a, b, mu, n, c, count):
    out = np.empty(count, dtype=np.uint64)
    top = n - U1
    for i in range(count):
        a = mu * a * (1.0 - a)
        if a <= 0.0 or a >= 1.0:
            return out, x, a, b, FAULT_DEGENERATE
        m = c + 1 if a > 0.5 else c
        for _ in range(m + 1):
            b = mu * b * (1.0 - b)
            if b <= 0.0 or b >= 1.0:
                return out, x, a, b, FAULT_DEGENERATE
            s = np.uint64(np.floor(100000.0 * b)) % n
            x ^= U1 << (top - s)
        out[i] = x
    return out, x, a, b, OK


@njit(cache=True)
def logistic_bits(x, mu, count):
    out = np.empty(count, dtype=np.uint8)
    for i in range(count):
        x = mu * x * (1.0 - x)
        if x <= 0.0 or x >= 1.0:
            return out, x, FAULT_DEGENERATE
        out[i] = 1 if x > 0.5 else 0
    return out, x, OK
