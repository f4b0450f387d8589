"""Bracketed scalar root finding.

A modified regula falsi (Illinois) iteration with bisection fallback.  It
keeps a sign-change bracket at every step, so it cannot escape the interval
the caller certified, and converges superlinearly on smooth crossings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NumericalError


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    iterations: int
    bracket: tuple


def bracket_root(fn, a: float, b: float, *, xtol: float = 0.0, rtol: float = 4e-16,
                 maxiter: int = 200, fa=None, fb=None) -> RootResult:
    """Root of ``fn`` in ``[a, b]`` given a sign change across the interval."""
    fa = float(fn(a) if fa is None else fa)
    fb = float(fn(b) if fb is None else fb)
    if fa == 0.0:
        return RootResult(a, 0.0, 0, (a, a))
    if fb == 0.0:
        return RootResult(b, 0.0, 0, (b, b))
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise NumericalError("no sign change on bracket", a=a, b=b, fa=fa, fb=fb)
    side = 0
    width = abs(b - a)
    for it in range(1, maxiter + 1):
        tol = xtol + rtol * max(abs(a), abs(b))
        if abs(b - a) <= tol:
            break
        c = (a * fb - b * fa) / (fb - fa)
        # fall back to bisection if the secant point is useless or progress stalls
        if not (min(a, b) < c < max(a, b)) or it % 4 == 0 and abs(b - a) > 0.5 * width:
            c = 0.5 * (a + b)
        if it % 4 == 0:
            width = abs(b - a)
        fc = float(fn(c))
        if fc == 0.0:
            return RootResult(c, 0.0, it, (c, c))
        if math.copysign(1.0, fc) == math.copysign(1.0, fb):
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
    else:
        it = maxiter
    x = a if abs(fa) < abs(fb) else b
    lo, hi = (a, b) if a < b else (b, a)
    return RootResult(x, abs(fn(x)), it, (lo, hi))


def bisect(fn, a: float, b: float, *, xtol: float, maxiter: int = 200):
    """Plain bisection returning the final bracket (sign of fn(a) is kept)."""
    fa = fn(a)
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        m = 0.5 * (a + b)
        fm = fn(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return a, b
