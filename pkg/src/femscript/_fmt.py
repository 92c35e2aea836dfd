"""Deterministic text formatting of real numbers.

All file exporters share one rule: the shortest decimal string that parses
back to the identical double.  Python's repr already guarantees shortest
round-trip for floats; integral values are further shortened to their
integer form ("0" rather than "0.0"), which still round-trips exactly.
"""

import math


def fmt_real(x) -> str:
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)
