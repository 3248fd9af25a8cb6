from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cirng.bitgen import (DISCARD_CAP, CiSeed, DecimationFault, DegenerateOrbitError,
                          LogisticMap, NewCi, OldCi, Selector, TraceCi, XorShift32,
                          bits_to_int, int_to_bits, make_generator, seed_from_int,
                          seed_from_time, unpack_states)
from oracles import g1_float_free, old_ci_script, xorshift_trace

GOLDEN_M = [0, 4, 2, 2]
GOLDEN_B = [1, 4, 2, 2, 3, 3, 4, 1, 1, 4]


# --- XORshift -------------------------------------------------------------

def test_xorshift_from_one():
    assert XorShift32(1).next() == 270369


def test_xorshift_matches_longhand_trace():
    g = XorShift32(0xDEADBEEF)
    assert [g.next() for _ in range(50)] == xorshift_trace(0xDEADBEEF, 50)


def test_xorshift_kernel_matches_step():
    a = XorShift32(12345)
    b = XorShift32(12345)
    assert list(a.words(1000)) == [b.next() for _ in range(1000)]
    assert a.z == b.z


@pytest.mark.parametrize("seed", [0, -1, 2**32])
def test_xorshift_rejects_bad_seed(seed):
    with pytest.raises(ValueError):
        XorShift32(seed)


def test_zero_is_fixed_point():
    assert xorshift_trace(0, 3) == [0, 0, 0]


def test_million_iterates_avoid_zero_and_seed():
    words = XorShift32(1).words(10**6)
    assert not np.any(words == 0)
    assert not np.any(words == 1)


def test_xorshift_bits_msb_first():
    w = XorShift32(1).next()
    assert bits_to_int(XorShift32(1).bits(32)) == w


# --- logistic map -----------------------------------------------------------

def test_logistic_quarter():
    assert LogisticMap(0.25, 4.0).next() == 0.75


def test_logistic_value():
    assert LogisticMap(0.3, 3.9999).next() == pytest.approx(0.8399790, abs=5e-8)


def test_logistic_peak_degenerates():
    lm = LogisticMap(0.5, 4.0)
    with pytest.raises(DegenerateOrbitError):
        lm.next()


@pytest.mark.parametrize("x,mu", [(0.0, 3.9), (1.0, 3.9), (0.3, 3.5), (0.3, 4.01)])
def test_logistic_rejects_bad_params(x, mu):
    with pytest.raises(ValueError):
        LogisticMap(x, mu)


def test_logistic_bits_kernel_matches_step():
    a, b = LogisticMap(0.123), LogisticMap(0.123)
    expect = [1 if b.next() > 0.5 else 0 for _ in range(500)]
    assert list(a.bits(500)) == expect
    assert a.x == b.x


# --- selectors ---------------------------------------------------------------

@pytest.mark.parametrize("y,m", [(0, 0), (2**31, 2), (2**32 - 1, 4),
                                 (2**28 - 1, 0), (2**28, 1), (5 * 2**28, 2),
                                 (11 * 2**28, 3), (15 * 2**28, 4)])
def test_g1_worked_ladder(y, m):
    assert Selector("g1", 4)(y) == m


def test_g2_reverses_top():
    assert Selector("g2", 4)(2**32 - 1) == 0
    assert Selector("g2", 4)(0) == 4


@pytest.mark.parametrize("n", [2, 3, 4, 8, 31, 32, 33, 63, 64])
def test_thresholds_exact(n):
    t = Selector("g1", n).thresholds
    assert t[-1] == 1
    assert all(a < b for a, b in zip(t, t[1:]))
    assert t[0] == Fraction(1, 2**n)
    assert t[n // 2] == Fraction(sum(comb(n, i) for i in range(n // 2 + 1)), 2**n)


@given(n=st.integers(2, 64), y=st.integers(0, 2**32 - 1))
def test_g1_matches_rational_oracle(n, y):
    assert Selector("g1", n)(y) == g1_float_free(n, y)


@given(n=st.integers(2, 64), y=st.integers(0, 2**32 - 1))
def test_g2_is_n_minus_g1(n, y):
    assert Selector("g2", n)(y) == n - Selector("g1", n)(y)


@pytest.mark.parametrize("kind", ["g1", "g2", "mod"])
def test_selector_map_matches_scalar(kind):
    ys = XorShift32(99).words(2000)
    sel = Selector(kind, 7)
    assert list(sel.map(ys)) == [sel(int(y)) for y in ys]


def test_selector_boundaries_near_thresholds():
    # every bound b: b-1 stays in the lower class, b moves up
    for n in (4, 10, 40, 64):
        sel = Selector("g1", n)
        for b in sel.bounds:
            if 0 < b < 2**32:
                assert sel(b) == g1_float_free(n, b)
                assert sel(b - 1) == g1_float_free(n, b - 1)


# --- New CI ------------------------------------------------------------------

def test_golden_trace_states():
    g = TraceCi(4, 0b0100, GOLDEN_M, GOLDEN_B)
    assert [g.next_state() for _ in range(4)] == [4, 11, 8, 1]


def test_golden_trace_bits():
    bits = TraceCi(4, 0b0100, GOLDEN_M, GOLDEN_B).bits(16)
    assert "".join(map(str, bits)) == "0100101110000001"


def test_ci_bits_count_zero_and_single_state():
    g = NewCi(4, 3, 5, 7)
    assert g.bits(0).size == 0
    g1, g2 = NewCi(4, 3, 5, 7), NewCi(4, 3, 5, 7)
    assert list(g1.bits(4)) == list(int_to_bits(g2.next_state(), 4))


def test_ci_bits_truncates_last_state():
    g1, g2 = NewCi(8, 3, 5, 7), NewCi(8, 3, 5, 7)
    full = unpack_states(g2.states(3), 8)
    assert np.array_equal(g1.bits(20), full[:20])


def test_m_zero_repeats_state():
    g = TraceCi(4, 9, [0, 0], [])
    assert [g.next_state(), g.next_state()] == [9, 9]


def test_m_n_complements_state():
    g = TraceCi(6, 0b101100, [6], [3, 3, 1, 6, 2, 2, 5, 4])
    assert g.next_state() == 0b010011


def test_trace_exhaustion():
    g = TraceCi(4, 0, [2], [1, 1, 1])
    with pytest.raises(IndexError):
        g.next_state()


def test_decimation_cap_raises():
    g = TraceCi(4, 0, [2], [1] * (DISCARD_CAP + 2))
    with pytest.raises(DecimationFault):
        g.next_state()


@pytest.mark.parametrize("n", [2, 4, 13, 32, 64])
@pytest.mark.parametrize("kind", ["g1", "g2", "mod"])
def test_each_round_flips_exactly_m_positions(n, kind):
    g = NewCi(n, 0, 1234567, 7654321, kind)
    shadow = XorShift32(1234567)
    sel = Selector(kind, n)
    prev = g.x
    for _ in range(300):
        m = sel(shadow.next())
        x = g.next_state()
        assert bin(x ^ prev).count("1") == m
        prev = x


@pytest.mark.parametrize("n,kind,mark", [(4, "g1", True), (32, "g1", True), (64, "g2", True),
                                         (16, "mod", True), (8, "g1", False), (64, "g1", False)])
def test_kernel_matches_step_path(n, kind, mark):
    a = NewCi(n, (1 << n) - 3, 0xC0FFEE, 0xBADF00D, kind, mark)
    b = NewCi(n, (1 << n) - 3, 0xC0FFEE, 0xBADF00D, kind, mark)
    assert [int(v) for v in a.states(500)] == [b.next_state() for _ in range(500)]
    assert (a.x, a.xs_m.z, a.xs_b.z) == (b.x, b.xs_m.z, b.xs_b.z)


def test_determinism_across_instances():
    s = CiSeed(32, 0xABCDEF, 17, 23)
    assert np.array_equal(s.make().bits(10_000), s.make().bits(10_000))


def test_no_mark_variant_can_undo_flips():
    # repeats allowed: some rounds flip fewer distinct bits than m
    g = NewCi(4, 0, 1, 2, mark=False)
    shadow = XorShift32(1)
    sel = Selector("g1", 4)
    short = 0
    prev = g.x
    for _ in range(500):
        m = sel(shadow.next())
        x = g.next_state()
        short += bin(x ^ prev).count("1") < m
        prev = x
    assert short > 0


@pytest.mark.parametrize("x0", [-1, 16])
def test_new_ci_rejects_wide_x0(x0):
    with pytest.raises(ValueError):
        NewCi(4, x0, 1, 1)


# --- Old CI ------------------------------------------------------------------

def test_old_ci_regression_pin():
    g = OldCi(4, 0, 0.3, 0.7, c=12)
    states = [g.next_state() for _ in range(8)]
    assert states == [6, 3, 10, 8, 6, 14, 1, 10]
    assert states == old_ci_script(0, 0.3, 0.7, 3.9999, 4, 12, 8)


def test_old_ci_kernel_matches_step():
    a, b = OldCi(16, 77, 0.41, 0.59), OldCi(16, 77, 0.41, 0.59)
    assert [int(v) for v in a.states(300)] == [b.next_state() for _ in range(300)]
    assert (a.x, a.lm_a.x, a.lm_b.x) == (b.x, b.lm_a.x, b.lm_b.x)


def test_old_ci_draw_counts():
    class Counting(LogisticMap):
        __slots__ = ("calls",)

        def next(self):
            self.calls += 1
            return super().next()

    g = OldCi(4, 0, 0.3, 0.7, c=12)
    g.lm_a, g.lm_b = Counting(0.3), Counting(0.7)
    g.lm_a.calls = g.lm_b.calls = 0
    for _ in range(50):
        before = g.lm_b.calls
        g.next_state()
        a = g.lm_a.x
        assert g.lm_b.calls - before == 12 + (1 if a > 0.5 else 0) + 1
    assert g.lm_a.calls == 50


def test_old_ci_fourteen_flips_when_a_high():
    # first iterate from 0.3 is 0.84 > 0.5, so m = 13 and 14 positions are drawn
    g = OldCi(4, 0, 0.3, 0.7, c=12)
    b = LogisticMap(0.7)
    expect = 0
    for _ in range(14):
        expect ^= 1 << (3 - int(100000 * b.next()) % 4)
    assert g.next_state() == expect


def test_old_ci_same_position_even_times_is_identity():
    x = 0b1010
    for _ in range(14):
        x ^= 1 << 2
    assert x == 0b1010


def test_old_ci_rejects_small_c():
    with pytest.raises(ValueError):
        OldCi(4, 0, 0.3, 0.7, c=11)


# --- seeding -------------------------------------------------------------------

def test_time_seed_y0_is_t():
    assert seed_from_int(484088, 4).y0 == 484088


def test_time_seed_x0_is_t_mod_2n():
    s = seed_from_int(484088, 4)
    assert s.x0 == 484088 % 16 == 8


@pytest.mark.xfail(strict=True, reason="484088 mod 16 is 8, i.e. (1,0,0,0); the worked "
                   "example's (0,1,0,0) cannot come from t mod 2**N in either bit order")
def test_time_seed_worked_example_state():
    assert int_to_bits(seed_from_int(484088, 4).x0, 4) == (0, 1, 0, 0)


def test_time_seed_zero_coerced():
    s = seed_from_int(0, 4)
    assert s.y0 == 1 and s.y0b != 0


def test_seed_from_clock_reading():
    s = seed_from_time(4, now=1237632934.484088)
    assert s.t == 484088
    assert s.y0 == 484088


def test_seed_second_stream_differs():
    s = seed_from_int(484088, 32)
    assert s.y0b == 484088 ^ 0x9E3779B9


def test_flip_bit_addresses_key():
    s = CiSeed(8, 0, 1, 1)
    assert s.flip_bit(0).x0 == 0x80
    assert s.flip_bit(8).y0 == 1 | 1 << 31
    # lowest y0b bit: 1 ^ 1 = 0, coerced back to 1
    assert s.flip_bit(8 + 63).y0b == 1
    assert s.flip_bit(8 + 62).y0b == 3
    with pytest.raises(IndexError):
        s.flip_bit(72)


@pytest.mark.parametrize("name", ["xorshift", "logistic", "old-ci", "new-ci"])
def test_make_generator_is_deterministic(name):
    a = make_generator(name, 42, 16).bits(1000)
    b = make_generator(name, 42, 16).bits(1000)
    assert a.dtype == np.uint8 and np.array_equal(a, b)


def test_make_generator_unknown():
    with pytest.raises(ValueError):
        make_generator("mt19937", 1)


@settings(max_examples=50)
@given(st.integers(0, 2**16 - 1))
def test_int_bits_roundtrip(v):
    assert bits_to_int(int_to_bits(v, 16)) == v
