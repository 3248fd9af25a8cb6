"""Command-line front end.

Exit status is 0 unless an operational error occurs; failing statistical
tests are reported as data.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, statlab
from .attacklab import AttackKind
from .bitgen import (GENERATORS, DecimationFault, DegenerateOrbitError, NewCi, SelectorKind,
                     TraceCi, make_generator, seed_from_time)
from .bitio import read_bits, write_bits
from .experiments import write_csv
from .imagery import BitPlaneSpec, NetpbmError, read_pbm, read_pgm, write_pbm, write_pgm
from .stego import CapacityError, KeyFormatError, StegoKey, embed, extract

log = logging.getLogger("cirng")

SEED_ENV = "CI_RAND_SEED"


def _int(text: str) -> int:
    return int(text, 0)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def resolve_seed(explicit: int | None) -> int:
    """Explicit seed, else $CI_RAND_SEED, else the microsecond digits of the clock."""
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env, 0)
    return seed_from_time(32).t


def build_generator(args):
    if args.trace_m is not None or args.trace_b is not None:
        if args.trace_m is None or args.trace_b is None or args.x0 is None:
            raise SystemExit("--trace-m, --trace-b and --x0 must be given together")
        return TraceCi(args.n_bits, args.x0, args.trace_m, args.trace_b, mark=not args.no_mark)
    if args.generator == "new-ci" and None not in (args.x0, args.y0, args.y0b):
        return NewCi(args.n_bits, args.x0, args.y0, args.y0b, args.selector, not args.no_mark)
    t = resolve_seed(args.seed)
    log.info("seed t=%d", t)
    return make_generator(args.generator, t, args.n_bits, selector=args.selector,
                          mark=not args.no_mark)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    bits = build_generator(args).bits(args.count) if args.count else np.zeros(0, np.uint8)
    write_bits(args.output, bits, args.format)
    return 0


def cmd_test(args) -> int:
    bits = read_bits(args.bitfile, args.format)
    results = statlab.battery(bits, alpha=args.alpha, poker_m=args.poker_m,
                              autocorr_d=args.autocorr_d, tests=args.tests)
    rows = []
    print(f"{'test':<16}{'statistic':>14}{'dof':>8}{'p-value':>12}  verdict")
    for name, res in zip(args.tests, results):
        if isinstance(res, statlab.TestReport):
            verdict = "pass" if res.passed else "FAIL"
            print(f"{name:<16}{res.statistic:>14.4f}{str(res.dof):>8}{res.p_value:>12.6f}  {verdict}")
            rows.append((name, res.statistic, res.dof, res.p_value, int(res.passed), ""))
        else:
            print(f"{name:<16}{'-':>14}{'-':>8}{'-':>12}  skipped: {res}")
            rows.append((name, "", "", "", "", str(res)))
    csv_path = args.csv or f"{args.bitfile}.tests.csv"
    write_csv(csv_path, ("test", "statistic", "dof", "p_value", "passed", "error"), rows)
    return 0


def cmd_bench(args) -> int:
    rows = experiments.bench(args.generators, args.bits, args.repeat, args.n_bits)
    print(f"{'generator':<10}{'bits':>10}{'seconds':>12}{'ns/bit':>10}")
    for r in rows:
        print(f"{r['generator']:<10}{r['bits']:>10}{r['seconds']:>12.6f}{r['ns_per_bit']:>10.2f}")
    if args.csv:
        write_csv(args.csv, ("generator", "bits", "seconds", "ns_per_bit"),
                  [tuple(r.values()) for r in rows])
    return 0


def cmd_nist_export(args) -> int:
    manifest = experiments.nist_export(args.outdir, args.sequences, args.length,
                                       args.generator, resolve_seed(args.seed), args.n_bits,
                                       args.selector, not args.no_mark)
    print(manifest)
    return 0


def _plane(args) -> BitPlaneSpec:
    return BitPlaneSpec(frozenset(args.msc), frozenset(args.lsc))


def cmd_wm_keygen(args) -> int:
    key = StegoKey.from_seed(resolve_seed(args.seed), n_bits=args.n_bits, mix_mode=args.mix,
                             embed_mode=args.mode, authenticated=args.auth)
    key.save(args.output)
    return 0


def cmd_wm_embed(args) -> int:
    marked = embed(read_pgm(args.cover), read_pbm(args.watermark), StegoKey.load(args.key),
                   _plane(args))
    write_pgm(args.output, marked)
    return 0


def cmd_wm_extract(args) -> int:
    original = read_pgm(args.original) if args.original else None
    reference = read_pbm(args.reference) if args.reference else None
    res = extract(read_pgm(args.image), StegoKey.load(args.key), _plane(args),
                  (args.width, args.height), original, reference)
    if args.output:
        write_pbm(args.output, res.watermark)
    if res.similarity is not None:
        print(f"similarity {res.similarity:.2f}%")
    return 0


def cmd_wm_attack(args) -> int:
    cover, mark = read_pgm(args.cover), read_pbm(args.watermark)
    base = StegoKey.load(args.key)
    keys = [base] if args.keys <= 1 else [base] + experiments.default_keys(
        args.keys - 1, base.y0, n_bits=base.n_bits, mix_mode=base.mix_mode,
        embed_mode=base.embed_mode)
    rows = experiments.attack_sweep(cover, mark, keys, args.kind, args.levels)
    write_csv(args.output, ("intensity", "unauth_similarity", "auth_similarity"), rows)
    for level, un, au in rows:
        print(f"{level:>8g}  unauth {un:6.2f}%  auth {au:6.2f}%")
    return 0


def cmd_experiment(args) -> int:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name
    if name == "fig1":
        for sel in ("g1", "mod"):
            pairs, hist = experiments.histogram_and_intensity(args.samples, selector=sel)
            write_csv(out / f"fig1_{sel}_histogram.csv", ("value", "count"), enumerate(hist))
            write_csv(out / f"fig1_{sel}_intensity.csv", ("x", "y", "count"),
                      ((x, y, pairs[x, y]) for x in range(16) for y in range(16)))
    elif name == "fig2":
        dec, raw = experiments.balance_runs(args.runs, args.length)
        rows = [(i, 1, p) for i, p in enumerate(dec)] + [(i, 0, p) for i, p in enumerate(raw)]
        write_csv(out / "fig2_balance.csv", ("run", "decimated", "percent"), rows)
        print(f"mean imbalance: decimated {dec.mean():.4f}%  no-mark {raw.mean():.4f}%")
    elif name == "fig3":
        lengths = [args.length * k // 10 for k in range(1, 11)]
        write_csv(out / "fig3_sensitivity.csv", ("length", "P"),
                  experiments.sensitivity_curve(lengths, args.runs))
    elif name == "fig4":
        bits = make_generator("new-ci", resolve_seed(args.seed), 32).bits(args.length)
        prof = statlab.lc_profile(bits)
        write_csv(out / "fig4_lc.csv", ("i", "lc", "ideal"),
                  ((i, int(prof[i]), i / 2) for i in range(1, len(prof))))
    else:
        rows = experiments.comparison_table(args.length)
        cols = ["method", "monobit", "serial", "poker", "runs", "autocorrelation", "time_s"]
        write_csv(out / "table2.csv", cols, ([r.get(c, "") for c in cols] for r in rows))
        for r in rows:
            print("  ".join(f"{r.get(c, ''):.4f}" if isinstance(r.get(c), float) else str(r.get(c))
                            for c in cols))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_generator_args(p, count: bool = True):
    p.add_argument("--generator", "-g", choices=GENERATORS, default="new-ci")
    p.add_argument("--n-bits", "-N", type=int, default=32, help="CI state width")
    p.add_argument("--selector", choices=[k.value for k in SelectorKind], default="g1")
    p.add_argument("--no-mark", action="store_true", help="disable decimation (mark vector)")
    p.add_argument("--seed", type=_int, help=f"integer time seed (overrides ${SEED_ENV})")
    if count:
        p.add_argument("--x0", type=_int)
        p.add_argument("--y0", type=_int)
        p.add_argument("--y0b", type=_int)
        p.add_argument("--trace-m", type=_int_list, help="inject m sequence, e.g. 0,4,2,2")
        p.add_argument("--trace-b", type=_int_list, help="inject 1-based positions")


def _add_plane_args(p):
    p.add_argument("--msc", type=_int_list, default=[7, 6, 5, 4])
    p.add_argument("--lsc", type=_int_list, default=[2, 1, 0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cirng", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write generated bits")
    _add_generator_args(p)
    p.add_argument("--count", "-n", type=int, default=2 * 10**5)
    p.add_argument("--format", choices=("ascii", "packed"), default="ascii")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("test", help="run the five-test battery on a bit file")
    p.add_argument("bitfile")
    p.add_argument("--format", choices=("auto", "ascii", "packed"), default="auto")
    p.add_argument("--tests", type=lambda s: s.split(","), default=list(statlab.BATTERY))
    p.add_argument("--alpha", type=float, default=statlab.DEFAULT_ALPHA)
    p.add_argument("--poker-m", type=int, default=8)
    p.add_argument("--autocorr-d", type=int, default=8)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("bench", help="time the generators")
    p.add_argument("--generators", type=lambda s: s.split(","), default=list(GENERATORS))
    p.add_argument("--bits", type=int, default=2 * 10**5)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--n-bits", "-N", type=int, default=32)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("nist-export", help="write sequences for the NIST SP 800-22 suite")
    _add_generator_args(p, count=False)
    p.add_argument("--sequences", type=int, default=100)
    p.add_argument("--length", type=int, default=10**6)
    p.add_argument("--outdir", "-o", required=True)
    p.set_defaults(func=cmd_nist_export)

    p = sub.add_parser("wm-keygen", help="write a watermarking key file")
    p.add_argument("--seed", type=_int)
    p.add_argument("--n-bits", "-N", type=int, default=64)
    p.add_argument("--mix", choices=("xor", "ci"), default="ci")
    p.add_argument("--mode", choices=("switch", "subst"), default="subst")
    p.add_argument("--auth", action="store_true")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_wm_keygen)

    p = sub.add_parser("wm-embed", help="embed a PBM watermark into a PGM cover")
    p.add_argument("--cover", required=True)
    p.add_argument("--watermark", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--output", "-o", required=True)
    _add_plane_args(p)
    p.set_defaults(func=cmd_wm_embed)

    p = sub.add_parser("wm-extract", help="extract a watermark")
    p.add_argument("--image", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--original", help="cover image (switch mode)")
    p.add_argument("--reference", help="watermark to score against")
    p.add_argument("--output", "-o")
    _add_plane_args(p)
    p.set_defaults(func=cmd_wm_extract)

    p = sub.add_parser("wm-attack", help="attack sweep, unauthenticated vs authenticated")
    p.add_argument("--cover", required=True)
    p.add_argument("--watermark", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--kind", choices=[k.value for k in AttackKind], required=True)
    p.add_argument("--levels", type=_float_list)
    p.add_argument("--keys", type=int, default=1, help="average over this many keys")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_wm_attack)

    p = sub.add_parser("experiment", help="reproduce an experiment as CSV")
    p.add_argument("name", choices=("fig1", "fig2", "fig3", "fig4", "tables"))
    p.add_argument("--outdir", "-o", default=".")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--length", type=int)
    p.add_argument("--seed", type=_int)
    p.set_defaults(func=cmd_experiment)
    return parser


_DEFAULT_LENGTH = {"fig2": 10**5, "fig3": 10**5, "fig4": 2000, "tables": 2 * 10**5}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "experiment" and args.length is None:
        args.length = _DEFAULT_LENGTH.get(args.name, 0)
    try:
        return args.func(args)
    except (OSError, NetpbmError, KeyFormatError, CapacityError, DecimationFault,
            DegenerateOrbitError, ValueError, IndexError) as exc:
        print(f"cirng {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
