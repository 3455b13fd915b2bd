"""Exact rational scalars.

gmpy2.mpq when available, fractions.Fraction otherwise.  Both are immutable,
hashable, and interoperate with Python ints, so the rest of the code is
agnostic to the choice.
"""

from __future__ import annotations

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from fractions import Fraction as Q

ZERO = Q(0)
ONE = Q(1)


def sign(x) -> int:
    """Exact trichotomy: -1, 0, or +1."""
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def parse_rational(text: str):
    """Parse 'p/q' or 'p' (also accepts a plain decimal like '0.5')."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return Q(int(num), int(den))
    if "." in text or "e" in text or "E" in text:
        # decimals go through Fraction to stay exact
        from fractions import Fraction

        f = Fraction(text)
        return Q(f.numerator, f.denominator)
    return Q(int(text))


def format_rational(x) -> str:
    """Canonical 'p/q' (or 'p' for integers) form used in all file formats."""
    x = Q(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
