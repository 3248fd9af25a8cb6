"""Chaotic-iterations pseudo-random generators, a statistical test lab, and
a chaos-based image watermarking pipeline."""

from .bitgen import (CiSeed, LogisticMap, NewCi, OldCi, Selector, SelectorKind, TraceCi,
                     XorShift32, make_generator, seed_from_time)

__all__ = ["CiSeed", "LogisticMap", "NewCi", "OldCi", "Selector", "SelectorKind",
           "TraceCi", "XorShift32", "make_generator", "seed_from_time"]
__version__ = "0.1.0"
