"""Q8.8 fixed-point helpers.

Temperatures, detector registers and threshold widths all live in unsigned
Q8.8: 16-bit raw integers with 8 fractional bits (resolution 1/256 of a
degree). Keeping the raw representation explicit makes the hardware shift
and rounding semantics exact and testable, instead of approximating them
with floats.
"""

from __future__ import annotations

FRAC_BITS = 8
ONE = 1 << FRAC_BITS          # 256 raw units per degree
RAW_MAX = (1 << 16) - 1       # largest representable raw value (255.996)


def to_raw(value: float) -> int:
    """Quantize a real value to Q8.8 raw units (round to nearest, clamp)."""
    raw = int(round(value * ONE))
    if raw < 0:
        return 0
    if raw > RAW_MAX:
        return RAW_MAX
    return raw


def from_raw(raw: int) -> float:
    return raw / ONE


def clamp_raw(raw: int, lo: int, hi: int) -> int:
    if raw < lo:
        return lo
    if raw > hi:
        return hi
    return raw


def div_round_half_up(num: int, den: int) -> int:
    """Integer division rounding to nearest, ties up. num >= 0, den > 0."""
    return (2 * num + den) // (2 * den)
