"""Adaptive Simpson quadrature with a relative tolerance and a subinterval cap."""

from __future__ import annotations

import math
from typing import Callable, Sequence

MAX_SUBINTERVALS = 2**20


class QuadratureError(ArithmeticError):
    pass


def adaptive_simpson(
    fn: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    breakpoints: Sequence[float] = (),
    max_subintervals: int = MAX_SUBINTERVALS,
) -> float:
    """Integrate ``fn`` over [a, b].

    ``breakpoints`` inside (a, b) split the range first; put kinks of ``fn``
    there so each piece is smooth. The subinterval budget is shared by all
    pieces and exceeding it raises QuadratureError.
    """
    if b < a:
        raise ValueError("integration bounds out of order")
    if a == b:
        return 0.0
    cuts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]

    # Coarse pass fixes an absolute error target from the integral's scale.
    coarse = 0.0
    pieces = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = fn(lo), fn(mid), fn(hi)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        coarse += abs(whole)
        pieces.append((lo, hi, flo, fmid, fhi, whole))
    abs_tol = max(rel_tol * coarse, 1e-300)

    budget = max_subintervals - len(pieces)
    total = 0.0
    for lo, hi, flo, fmid, fhi, whole in pieces:
        tol = abs_tol * (hi - lo) / (b - a)
        # explicit stack instead of recursion; depth can reach ~50
        stack = [(lo, hi, flo, fmid, fhi, whole, tol)]
        while stack:
            lo_, hi_, fl, fm, fh, est, eps = stack.pop()
            m = 0.5 * (lo_ + hi_)
            lm, rm = 0.5 * (lo_ + m), 0.5 * (m + hi_)
            flm, frm = fn(lm), fn(rm)
            left = (m - lo_) / 6.0 * (fl + 4.0 * flm + fm)
            right = (hi_ - m) / 6.0 * (fm + 4.0 * frm + fh)
            delta = left + right - est
            if abs(delta) <= 15.0 * eps or m == lo_ or m == hi_:
                total += left + right + delta / 15.0
                continue
            budget -= 1
            if budget <= 0:
                raise QuadratureError(
                    f"adaptive Simpson exceeded {max_subintervals} subintervals"
                )
            stack.append((m, hi_, fm, frm, fh, right, 0.5 * eps))
            stack.append((lo_, m, fl, flm, fm, left, 0.5 * eps))
    if not math.isfinite(total):
        raise QuadratureError("non-finite integral")
    return total
