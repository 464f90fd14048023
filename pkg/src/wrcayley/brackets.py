"""Monotone envelope bounds for all boundary-law fields and a uniqueness certificate.

For theta < 1 every solution (z1_i, z2_i) of the vertex recursion, homogeneous
or not, satisfies z1_lo <= z1_i <= z1_hi and z2_lo <= z2_i <= z2_hi, where the
quadruple is the limit of a monotone iteration started from
(lam theta^k, lam, lam theta^k, lam). If the envelope collapses, the boundary
law is unique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, UnsupportedRegimeError, eval_f, f_scalar

HARDCORE_SEED = 1e-300
_MONO_SLACK = 1e-13


@dataclass(frozen=True)
class BracketQuadruple:
    z1_lo: float
    z1_hi: float
    z2_lo: float
    z2_hi: float
    iterations: int
    converged: bool

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.z1_lo, self.z1_hi, self.z2_lo, self.z2_hi)

    def contains(self, z1, z2, rtol: float = 1e-9) -> bool:
        z1, z2 = np.asarray(z1), np.asarray(z2)
        return bool(np.all(z1 >= self.z1_lo * (1 - rtol)) and np.all(z1 <= self.z1_hi * (1 + rtol))
                    and np.all(z2 >= self.z2_lo * (1 - rtol)) and np.all(z2 <= self.z2_hi * (1 + rtol)))


def seed_logs(k, theta, lam):
    """Log of the starting envelope (lam theta^k, lam); vectorised."""
    log_lam = np.log(lam)
    with np.errstate(divide="ignore"):
        lo = log_lam + k * np.log(theta)
    lo = np.maximum(lo, math.log(HARDCORE_SEED))
    return lo, log_lam


def bounds_step(l1lo, l1hi, l2lo, l2hi, k, log_lam, theta):
    """One step of the envelope iteration in log coordinates; vectorised over parameters."""
    return (log_lam + k * eval_f(l1lo, l2hi, theta),
            log_lam + k * eval_f(l1hi, l2lo, theta),
            log_lam + k * eval_f(l2lo, l1hi, theta),
            log_lam + k * eval_f(l2hi, l1lo, theta))


def _scalar_step(z, k, log_lam, th):
    l1lo, l1hi, l2lo, l2hi = z
    return (log_lam + k * f_scalar(l1lo, l2hi, th),
            log_lam + k * f_scalar(l1hi, l2lo, th),
            log_lam + k * f_scalar(l2lo, l1hi, th),
            log_lam + k * f_scalar(l2hi, l1lo, th))


def iterate_bounds(p: ModelParams, max_iter: int = 100_000, tol: float = 1e-12,
                   history: list | None = None) -> BracketQuadruple:
    """Run the envelope iteration to its limit.

    Lower sequences must increase and upper ones decrease; a violation beyond
    rounding raises ``AssertionError``. Pass a list as ``history`` to collect
    the linear-domain quadruple after every step.
    """
    if p.theta >= 1.0:
        raise UnsupportedRegimeError("envelope bounds need theta < 1")
    lo, hi = seed_logs(p.k, p.theta, p.lam)
    z = (float(lo), float(hi), float(lo), float(hi))
    k, log_lam, th = p.k, p.log_lam, p.theta
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = _scalar_step(z, k, log_lam, th)
        slack = _MONO_SLACK * max(1.0, max(abs(v) for v in z))
        if new[0] < z[0] - slack or new[2] < z[2] - slack:
            raise AssertionError(f"lower envelope decreased at step {it}")
        if new[1] > z[1] + slack or new[3] > z[3] + slack:
            raise AssertionError(f"upper envelope increased at step {it}")
        change = max(abs(a - b) for a, b in zip(new, z))
        z = new
        if history is not None:
            history.append(tuple(math.exp(v) for v in z))
        if change < tol:
            converged = True
            break
    return BracketQuadruple(*(math.exp(v) for v in z), iterations=it, converged=converged)


def bracket_system_residual(quad, p: ModelParams) -> float:
    """Max relative residual of the four coupled envelope fixed-point equations."""
    z1lo, z1hi, z2lo, z2hi = quad.as_tuple() if hasattr(quad, "as_tuple") else quad
    logs = [math.log(v) for v in (z1lo, z1hi, z2lo, z2hi)]
    img = bounds_step(*logs, p.k, p.log_lam, p.theta)
    return max(abs(math.expm1(float(i) - l)) for i, l in zip(img, logs))


def k2_bracket_solutions(p: ModelParams) -> list[tuple[float, float, float, float]]:
    """Solutions of the envelope system for k=2 assembled from the TISGM laws.

    One solution (x*, x*, x*, x*) in the uniqueness region, four otherwise.
    """
    from .tisgm import solve_tisgm

    if p.k != 2:
        raise UnsupportedRegimeError("closed-form envelope solutions are for k = 2")
    sols = solve_tisgm(p)
    xs = sols.diagonal[0].x
    if not sols.offdiagonal:
        return [(xs, xs, xs, xs)]
    x1, x2 = sols.offdiagonal[0].as_tuple()
    return [(x1, x1, x2, x2), (x1, x2, x1, x2), (x2, x1, x2, x1), (x2, x2, x1, x1)]


@dataclass
class UniquenessDecision:
    status: str
    quadruple: BracketQuadruple
    gap: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status == "CERTIFIED_UNIQUE"


def uniqueness_certificate(p: ModelParams, tol: float = 1e-8, max_iter: int = 100_000,
                           conv_tol: float = 1e-12) -> UniquenessDecision:
    """CERTIFIED_UNIQUE if the envelope collapses, INCONCLUSIVE otherwise.

    Never asserts non-uniqueness: a wide envelope only means the bounds cannot
    rule out several laws.
    """
    quad = iterate_bounds(p, max_iter=max_iter, tol=conv_tol)
    gap1 = quad.z1_hi - quad.z1_lo
    gap2 = quad.z2_hi - quad.z2_lo
    diag = {"iterations": quad.iterations, "converged": quad.converged, "gap_z2": gap2}
    if not quad.converged:
        diag["reason"] = "envelope iteration did not converge"
        return UniquenessDecision("INCONCLUSIVE", quad, gap1, diag)
    if gap1 <= tol * max(1.0, quad.z1_hi):
        if gap2 > 1e-9 * max(1.0, quad.z2_hi):
            raise AssertionError("first envelope collapsed but the second did not")
        return UniquenessDecision("CERTIFIED_UNIQUE", quad, gap1, diag)
    return UniquenessDecision("INCONCLUSIVE", quad, gap1, diag)
