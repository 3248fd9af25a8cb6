"""Experiment drivers behind the ``experiment``, ``bench``, ``nist-export`` and
``wm-attack`` subcommands.  Each returns plain rows ready for CSV output.
"""

from __future__ import annotations

import csv
import os
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import statlab
from .attacklab import AttackKind, AttackSpec
from .bitgen import GENERATORS, CiSeed, SelectorKind, make_generator
from .bitio import write_bits
from .imagery import BitImage, GrayImage
from .stego import StegoKey, embed, extract, with_auth

DEFAULT_SWEEPS = {
    AttackKind.CROP: (10, 50, 100, 200),
    AttackKind.ROTATE: (2, 5, 10, 25),
    AttackKind.JPEG: (2, 5, 10, 20),
    AttackKind.GAUSS: (1, 2, 3, 5),
}


def jpeg_quality(level: float) -> int:
    """Map a compression level (higher = stronger) onto an IJG quality factor."""
    return int(max(1, min(100, round(100 - level))))


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as f:
        out = csv.writer(f)
        out.writerow(header)
        out.writerows(rows)


# ---------------------------------------------------------------------------
# PRNG experiments


def histogram_and_intensity(n_samples: int = 10**6, t: int = 484088,
                            selector: SelectorKind | str = SelectorKind.G1):
    """Value histogram and adjacent-pair map of N=4 New CI outputs."""
    gen = make_generator("new-ci", t, n_bits=4, selector=selector)
    return statlab.pair_intensity(gen.states(n_samples), 4)


def balance_runs(num_seqs: int = 100, seq_len: int = 10**5, n_bits: int = 32,
                 base_seed: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Balance percentages with and without decimation, same seeds for both."""
    def factory(i, decimated):
        return CiSeed.from_int(base_seed + 7919 * i, n_bits, mark=decimated).make()

    return (statlab.balance_experiment(factory, num_seqs, seq_len, True),
            statlab.balance_experiment(factory, num_seqs, seq_len, False))


def sensitivity_curve(lengths: Sequence[int], pairs: int = 20, n_bits: int = 32,
                      base_seed: int = 1) -> list[tuple[int, float]]:
    """Mean P over ``pairs`` keys, each with one flipped XORshift-seed bit."""
    rows = []
    for n in lengths:
        ps = []
        for i in range(pairs):
            seed = CiSeed.from_int(base_seed + 104729 * i, n_bits)
            ps.append(statlab.key_sensitivity(seed, n_bits + (i % 64), n))
        rows.append((n, float(np.mean(ps))))
    return rows


def comparison_table(length: int = 2 * 10**5, t: int = 484088, n_bits: int = 32,
                     alpha: float = statlab.DEFAULT_ALPHA) -> list[dict]:
    """Five-test statistics and generation time for the four generators."""
    rows = []
    for name in GENERATORS:
        make_generator(name, t, n_bits).bits(64)  # compile outside the timed region
        gen = make_generator(name, t, n_bits)
        start = time.perf_counter()
        bits = gen.bits(length)
        elapsed = time.perf_counter() - start
        row = {"method": name, "time_s": elapsed}
        for rep in statlab.battery(bits, alpha=alpha):
            if isinstance(rep, statlab.TestReport):
                row[rep.test_name] = rep.statistic
                row[rep.test_name + "_p"] = rep.p_value
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Benchmark


def bench(generators: Sequence[str] = GENERATORS, n_bits_out: int = 2 * 10**5,
          repeat: int = 5, n_bits: int = 32, t: int = 484088) -> list[dict]:
    """Best-of-``repeat`` wall time to produce ``n_bits_out`` bits per generator."""
    rows = []
    for name in generators:
        make_generator(name, t, n_bits).bits(1024)
        best = float("inf")
        for r in range(repeat):
            gen = make_generator(name, t + r, n_bits)
            start = time.perf_counter_ns()
            gen.bits(n_bits_out)
            best = min(best, time.perf_counter_ns() - start)
        rows.append({"generator": name, "bits": n_bits_out, "seconds": best / 1e9,
                     "ns_per_bit": best / max(n_bits_out, 1)})
    return rows


# ---------------------------------------------------------------------------
# NIST export


def nist_export(outdir: str | os.PathLike, sequences: int = 100, length: int = 10**6,
                generator: str = "new-ci", base_seed: int = 1, n_bits: int = 32,
                selector: SelectorKind | str = SelectorKind.G1, mark: bool = True) -> Path:
    """One ASCII file per sequence plus ``manifest.csv`` (file, seed, length)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(sequences - 1)))
    rows = []
    for i in range(sequences):
        seed = base_seed + i
        name = f"seq_{i:0{width}d}.txt"
        gen = make_generator(generator, seed, n_bits, selector=selector, mark=mark)
        write_bits(outdir / name, gen.bits(length), fmt="nist")
        rows.append((name, seed, length))
    manifest = outdir / "manifest.csv"
    write_csv(manifest, ("file", "seed", "length"), rows)
    return manifest


# ---------------------------------------------------------------------------
# Watermark attacks


def attack_sweep(cover: GrayImage, watermark: BitImage, keys: Sequence[StegoKey],
                 kind: AttackKind | str, intensities: Sequence[float] | None = None,
                 noise_seed: int = 0x5EED) -> list[tuple[float, float, float]]:
    """(intensity, unauthenticated %, authenticated %) averaged over ``keys``.

    JPEG intensities are compression levels, mapped by :func:`jpeg_quality`.
    """
    kind = AttackKind(kind)
    if intensities is None:
        intensities = DEFAULT_SWEEPS[kind]
    dims = (watermark.width, watermark.height)
    marked = {}
    for j, key in enumerate(keys):
        for auth in (False, True):
            k = with_auth(key, auth)
            marked[j, auth] = (k, embed(cover, watermark, k))
    rows = []
    for level in intensities:
        amount = jpeg_quality(level) if kind is AttackKind.JPEG else level
        spec = AttackSpec(kind, amount, noise_seed)
        scores = {False: [], True: []}
        for (j, auth), (k, img) in marked.items():
            res = extract(spec.apply(img), k, w_dims=dims, reference=watermark)
            scores[auth].append(res.similarity)
        rows.append((level, float(np.mean(scores[False])), float(np.mean(scores[True]))))
    return rows


def default_keys(count: int, base_seed: int = 1, **kw) -> list[StegoKey]:
    return [StegoKey.from_seed(base_seed + i, **kw) for i in range(count)]
