"""Bracketing scalar root finding: sign-change scan, Brent refinement, merging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

XTOL = 1e-15
MERGE_RTOL = 1e-7


@dataclass(frozen=True)
class Root:
    value: float
    double: bool = False


def refine(fn, lo: float, hi: float) -> float:
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    return brentq(fn, lo, hi, xtol=XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def scan_roots(fn, grid) -> list[float]:
    """All roots of ``fn`` that change sign between consecutive grid points."""
    grid = np.asarray(grid, dtype=float)
    vals = np.array([fn(g) for g in grid])
    roots = [float(g) for g, v in zip(grid, vals) if v == 0.0]
    s = np.sign(vals)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        roots.append(refine(fn, grid[i], grid[i + 1]))
    return sorted(roots)


def merge(values, rtol: float = MERGE_RTOL) -> list[Root]:
    """Collapse roots closer than ``rtol`` (relative) into one flagged double root."""
    out: list[Root] = []
    for v in sorted(values):
        if out and abs(v - out[-1].value) <= rtol * max(abs(v), abs(out[-1].value), 1e-300):
            out[-1] = Root(0.5 * (v + out[-1].value), double=True)
        else:
            out.append(Root(float(v)))
    return out


def grow_upper(fn, lo: float, hi: float, max_doublings: int = 200) -> float:
    """Double ``hi`` until ``fn`` changes sign on [lo, hi]."""
    flo = fn(lo)
    for _ in range(max_doublings):
        if np.sign(fn(hi)) != np.sign(flo):
            return hi
        hi = lo + 2.0 * (hi - lo)
    raise RuntimeError("failed to bracket root")
