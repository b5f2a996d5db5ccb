from __future__ import annotations

from typing import Callable

from scipy.optimize import brentq


class BracketError(RuntimeError):
    """No sign change on a bracket that theory says must contain a root."""


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = 1e-12,
    what: str = "root",
    snap: float = 0.0,
) -> float:
    """Brent root of ``f`` on [lo, hi].

    When the ends share a sign but one of them is within ``snap`` of zero, that
    end is returned: the root is there up to rounding of ``f``.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        if min(abs(flo), abs(fhi)) <= snap:
            return lo if abs(flo) <= abs(fhi) else hi
        raise BracketError(
            f"{what}: no sign change on [{lo!r}, {hi!r}] (f={flo!r}, {fhi!r})"
        )
    return brentq(f, lo, hi, xtol=xtol, maxiter=500)
