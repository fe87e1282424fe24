"""Decimal formatting shared by every text output.

Floats are written with 17 significant digits and a bare exponent
(``1.0000000000000000e0``), which round-trips binary64 exactly.
"""
import math


def format_float(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return repr(x)
    mantissa, exponent = f"{x:.16e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value
