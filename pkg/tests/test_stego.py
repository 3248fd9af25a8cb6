import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cirng.bitgen import NewCi
from cirng.imagery import BitImage, BitPlaneSpec, GrayImage, extract_plane, synthetic_cover, synthetic_watermark
from cirng.stego import (CapacityError, EmbedMode, KeyFormatError, MixMode, StegoKey,
                         build_strategy_u, chaotic_positions, embed, extract, key_prng,
                         mix_chaotic, mix_xor, msc_digest, restore_cover, similarity, with_auth)

KEY = StegoKey(0x0123456789ABCDEF, 484088, 2653952833)
MSC = BitPlaneSpec().msc_bits
LSC = BitPlaneSpec().lsc_bits


@pytest.fixture(scope="module")
def cover():
    return synthetic_cover()


@pytest.fixture(scope="module")
def mark():
    return synthetic_watermark()


# --- keys -------------------------------------------------------------------

def test_key_format_roundtrip(tmp_path):
    k = StegoKey(0xABC, 7, 9, 32, "xor", "switch", True)
    assert StegoKey.parse(k.format()) == k
    k.save(tmp_path / "k.txt")
    assert StegoKey.load(tmp_path / "k.txt") == k


def test_key_format_layout():
    assert KEY.format() == ("x0=123456789abcdef y0=484088 y0b=2653952833 n=64 "
                            "mix=ci mode=subst auth=0")


def test_key_parse_errors():
    with pytest.raises(KeyFormatError):
        StegoKey.parse("x0=1 y0=2")
    with pytest.raises(KeyFormatError):
        StegoKey.parse("x0=zz y0=1 y0b=1 n=64 mix=ci mode=subst auth=0")
    with pytest.raises(KeyFormatError):
        StegoKey.parse("x0=1 y0=1 y0b=1 n=64 mix=rot13 mode=subst auth=0")


def test_key_coerces_zero_seeds():
    k = StegoKey(0, 0, 0)
    assert k.y0 != 0 and k.y0b != 0


def test_from_seed_deterministic():
    assert StegoKey.from_seed(5) == StegoKey.from_seed(5) != StegoKey.from_seed(6)


# --- mixing -----------------------------------------------------------------

def test_mix_xor_zero_is_keystream():
    z = np.zeros(300, np.uint8)
    assert np.array_equal(mix_xor(z, KEY), key_prng(KEY).bits(300))


def test_mix_xor_regression_pin():
    got = "".join(map(str, mix_xor(np.zeros(64, np.uint8), KEY)))
    assert got == "1000101011000101110011011100111100111001100101010011101101001110"


@settings(max_examples=300, deadline=None)
@given(arrays(np.uint8, st.integers(1, 64), elements=st.integers(0, 1)),
       st.integers(0, 2**64 - 1), st.integers(1, 2**32 - 1))
def test_mix_xor_involution(w, x0, y0):
    k = StegoKey(x0, y0, y0 ^ 0x5A5A)
    assert np.array_equal(mix_xor(mix_xor(w, k), k), w)


def test_mix_chaotic_zero_iterations():
    w = synthetic_watermark().flat()
    assert np.array_equal(mix_chaotic(w, KEY, 0), w)


def test_mix_chaotic_matches_flip_loop():
    w = np.random.default_rng(3).integers(0, 2, 100).astype(np.uint8)
    out = w.copy()
    for s in key_prng(KEY).states(250):
        out[int(s) % 100] ^= 1
    assert np.array_equal(mix_chaotic(w, KEY, 250), out)
    assert np.array_equal(chaotic_positions(KEY, 100, 250),
                          key_prng(KEY).states(250) % np.uint64(100))


@settings(max_examples=300, deadline=None)
@given(arrays(np.uint8, st.integers(1, 64), elements=st.integers(0, 1)),
       st.integers(0, 2**64 - 1), st.integers(1, 2**32 - 1), st.integers(0, 200))
def test_mix_chaotic_replay_inverts(w, x0, y0, iters):
    k = StegoKey(x0, y0, 1 + y0 % 1000)
    assert np.array_equal(mix_chaotic(mix_chaotic(w, k, iters), k, iters), w)


def test_mix_chaotic_flip_fraction():
    w = synthetic_watermark().flat()
    fracs = [np.mean(mix_chaotic(w, StegoKey.from_seed(i)) != w) for i in range(20)]
    # parity of Poisson(2) flips per bit is odd with probability (1 - e^-4) / 2
    assert np.mean(fracs) == pytest.approx((1 - np.exp(-4)) / 2, abs=0.01)
    assert 0.48 <= np.mean(fracs) <= 0.52


def test_mix_chaotic_empty():
    with pytest.raises(ValueError):
        mix_chaotic(np.zeros(0, np.uint8), KEY)


# --- strategy ------------------------------------------------------------------

def test_strategy_recurrence_example():
    assert build_strategy_u(KEY, 2, 10**9, states=[5, 10]).tolist() == [5, 20]


def test_strategy_recurrence_longhand():
    s = [int(v) for v in key_prng(KEY, stream=1).states(50)]
    m = 1 << 40
    u = [s[0] % m]
    for n in range(49):
        u.append((s[n + 1] + 2 * u[n] + n) % m)
    assert build_strategy_u(KEY, 50, m, distinct=False).tolist() == u


def test_strategy_empty():
    assert build_strategy_u(KEY, 0, 100).size == 0


def test_strategy_distinct_and_in_range():
    u = build_strategy_u(KEY, 4096, 196608)
    assert np.unique(u).size == 4096
    assert u.min() >= 0 and u.max() < 196608


def test_strategy_distinct_skips_repeats_only():
    # small modulus forces repeats
    raw = build_strategy_u(KEY, 12, 7, distinct=False, states=range(100, 112)).tolist()
    dedup = list(dict.fromkeys(raw))
    got = build_strategy_u(KEY, len(dedup), 7, states=range(100, 112)).tolist()
    assert got == dedup


def test_strategy_errors():
    with pytest.raises(CapacityError):
        build_strategy_u(KEY, 11, 10)
    with pytest.raises(ValueError):
        build_strategy_u(KEY, 1, 0)
    with pytest.raises(ValueError):
        build_strategy_u(KEY, 3, 100, states=[1, 2])


def test_strategy_sensitive_to_digest():
    a = build_strategy_u(KEY, 4096, 196608, msc_digest=0)
    b = build_strategy_u(KEY, 4096, 196608, msc_digest=1 << 17)
    assert np.mean(a != b) > 0.99


# --- digest ------------------------------------------------------------------

def test_digest_zero():
    assert msc_digest(np.zeros(262144, np.uint8)) == 0


@pytest.mark.parametrize("p", [0, 1, 63, 64, 1000, 262143])
def test_digest_single_bit(p):
    bits = np.zeros(262144, np.uint8)
    bits[p] = 1
    d = msc_digest(bits)
    assert bin(d).count("1") == 1
    assert d == 1 << (63 - p % 64)


def test_digest_pin():
    assert msc_digest(np.arange(200) % 3 == 0) == 0x6DFFFFFFFFFFFFFF


# --- embedding -----------------------------------------------------------------

@pytest.mark.parametrize("mix_mode", ["xor", "ci"])
@pytest.mark.parametrize("auth", [False, True])
def test_substitute_roundtrip(cover, mark, mix_mode, auth):
    k = StegoKey(KEY.x0, KEY.y0, KEY.y0b, mix_mode=mix_mode, authenticated=auth)
    res = extract(embed(cover, mark, k), k, reference=mark)
    assert res.watermark == mark and res.similarity == 100.0


def test_embed_preserves_msc_and_bounds_change(cover, mark):
    stego = embed(cover, mark, with_auth(KEY, True))
    assert np.array_equal(extract_plane(stego, MSC), extract_plane(cover, MSC))
    assert np.array_equal(stego.pixels & 0b1000, cover.pixels & 0b1000)
    diff = np.abs(stego.pixels.astype(int) - cover.pixels.astype(int))
    assert diff.max() <= 7


@settings(max_examples=200, deadline=None)
@given(arrays(np.uint8, (8, 8)), arrays(np.uint8, (4, 4), elements=st.integers(0, 1)),
       st.integers(0, 2**64 - 1), st.booleans(), st.sampled_from(["switch", "subst"]))
def test_embed_msc_preservation_property(px, w, seed, auth, mode):
    cover, k = GrayImage(px), StegoKey.from_seed(seed, authenticated=auth, embed_mode=mode)
    stego = embed(cover, BitImage(w), k)
    assert np.array_equal(stego.pixels & 0xF0, cover.pixels & 0xF0)
    assert np.array_equal(stego.pixels & 0b1000, cover.pixels & 0b1000)


def test_switch_mode_roundtrip_and_restore(cover, mark):
    k = StegoKey(KEY.x0, KEY.y0, KEY.y0b, embed_mode="switch")
    stego = embed(cover, mark, k)
    assert extract(stego, k, original=cover).watermark == mark
    assert restore_cover(stego, mark, k) == cover
    with pytest.raises(ValueError):
        extract(stego, k)


def test_restore_requires_switch(cover, mark):
    with pytest.raises(ValueError):
        restore_cover(cover, mark, KEY)


def test_capacity_error():
    tiny = GrayImage(np.zeros((4, 4), np.uint8))
    with pytest.raises(CapacityError):
        embed(tiny, BitImage(np.ones((7, 7), np.uint8)), KEY)
    with pytest.raises(CapacityError):
        extract(tiny, KEY, w_dims=(7, 7))


def test_wrong_key_gives_chance(cover, mark):
    stego = embed(cover, mark, KEY)
    other = StegoKey(KEY.x0, KEY.y0 ^ 1, KEY.y0b)
    assert 45 <= extract(stego, other, reference=mark).similarity <= 55


def test_unauth_invariant_to_msc_change(cover, mark):
    stego = embed(cover, mark, KEY)
    px = stego.pixels.copy()
    px[10, 10] ^= 0x80
    assert extract(GrayImage(px), KEY).watermark == mark


def test_auth_detects_msc_change(cover, mark):
    k = with_auth(KEY, True)
    stego = embed(cover, mark, k)
    px = stego.pixels.copy()
    px[10, 10] ^= 0x10
    assert 45 <= extract(GrayImage(px), k, reference=mark).similarity <= 57


def test_similarity():
    a = BitImage(np.random.default_rng(0).integers(0, 2, (64, 64)))
    b = BitImage(np.random.default_rng(1).integers(0, 2, (64, 64)))
    assert similarity(a, a) == 100.0
    assert similarity(a, BitImage(1 - a.bits)) == 0.0
    assert 48 <= similarity(a, b) <= 52
    with pytest.raises(ValueError):
        similarity(a, BitImage(np.zeros((2, 2))))


def test_modes_parse():
    assert MixMode("xor") is MixMode.XOR and EmbedMode("subst") is EmbedMode.SUBSTITUTE
    assert key_prng(KEY).n_bits == 64 and isinstance(key_prng(KEY), NewCi)
