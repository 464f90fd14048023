"""Two-periodic boundary laws for theta < 1.

On the symmetric slice z1 = z2 the recursion reduces to the scalar map
phi(x) = lam ((1 + (1+theta)x)/(1 + 2x))^k, which is decreasing. Period-2
boundary laws with even-shell value z and odd-shell value t are 2-cycles
t = phi(z), z = phi(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .brackets import iterate_bounds
from .critical import kappa, periodic_threshold, s_plus_minus
from .model import (
    DomainError,
    FieldAssignment,
    ModelParams,
    TreeIndex,
    UnsupportedRegimeError,
    eval_F,
)
from .roots import merge, scan_roots
from .tisgm import solve_diagonal

N_CELLS = 512
_CYCLE_RTOL = 1e-9


@dataclass(frozen=True)
class TwoPeriodicSolution:
    z_even: float
    z_odd: float

    @property
    def is_translation_invariant(self) -> bool:
        return abs(self.z_even - self.z_odd) <= _CYCLE_RTOL * max(self.z_even, self.z_odd)


@dataclass(frozen=True)
class PeriodicWindow:
    k: int
    theta: float
    s_minus: float | None = None
    s_plus: float | None = None
    lam_minus: float | None = None
    lam_plus: float | None = None
    violated: str | None = None

    @property
    def empty(self) -> bool:
        return self.violated is not None

    def contains(self, lam: float) -> bool:
        return not self.empty and self.lam_minus < lam < self.lam_plus


def _require_ferro(p: ModelParams):
    if p.theta > 1.0:
        raise UnsupportedRegimeError("the symmetric map is only monotone for theta <= 1")


def eval_phi(x, p: ModelParams):
    _require_ferro(p)
    x = np.asarray(x, dtype=float)
    out = p.lam * ((1 + (1 + p.theta) * x) / (1 + 2 * x)) ** p.k
    return out[()] if out.ndim == 0 else out


def _phi(x: float, p: ModelParams) -> float:
    return p.lam * ((1 + (1 + p.theta) * x) / (1 + 2 * x)) ** p.k


def periodic_window(k: int, theta: float) -> PeriodicWindow:
    """Range of lam on which the period-2 existence result applies.

    Empty, with the failing hypothesis named, when k < 6 or theta is not below
    (k^2 - 6k + 1)/(k+1)^2.
    """
    if k < 6:
        return PeriodicWindow(k, theta, violated=f"k >= 6 (got k = {k}; k^2-6k+1 = {k * k - 6 * k + 1})")
    if theta < 0:
        return PeriodicWindow(k, theta, violated="theta >= 0")
    thr = periodic_threshold(k)
    if not theta < thr:
        return PeriodicWindow(k, theta, violated=f"theta < (k^2-6k+1)/(k+1)^2 = {thr:.17g}")
    sm, sp = s_plus_minus(k, theta)
    lm, lp = float(kappa(sm, k, theta)), float(kappa(sp, k, theta))
    assert lm < lp, "period-2 window endpoints out of order"
    return PeriodicWindow(k, theta, sm, sp, lm, lp)


def instability_margin(x: float, p: ModelParams) -> float:
    """2(1+theta)x^2 + (3+theta-k(1-theta))x + 1; negative iff phi'(x) < -1 at the diagonal root x."""
    th, k = p.theta, p.k
    return 2 * (1 + th) * x * x + (3 + th - k * (1 - th)) * x + 1


def phi_derivative(x: float, p: ModelParams) -> float:
    th = p.theta
    return p.k * _phi(x, p) * (th - 1) / ((1 + (1 + th) * x) * (1 + 2 * x))


def two_periodic_residual(sol: TwoPeriodicSolution, p: ModelParams) -> float:
    """Max relative residual of the full four-equation system with z1 = z2 = z and t1 = t2 = t."""
    z, t, th, lam, k = sol.z_even, sol.z_odd, p.theta, p.lam, p.k
    res = []
    for target, a, b in ((z, t, t), (t, z, z)):
        # both components of the image coincide on the symmetric slice
        res.append(abs(lam * float(eval_F(a, b, th)) ** k / target - 1))
        res.append(abs(lam * float(eval_F(b, a, th)) ** k / target - 1))
    return max(res)


def solve_two_periodic(p: ModelParams, n_cells: int = N_CELLS) -> list[TwoPeriodicSolution]:
    """Every symmetric period-2 law: the diagonal one first, then genuine 2-cycles.

    Cycle points lie inside the envelope [z1_lo, z1_hi], so a sign scan of
    phi(phi(x)) - x on the part below the diagonal root finds all of them;
    the partner of each is phi(z).
    """
    _require_ferro(p)
    xs = solve_diagonal(p)[0]
    out = [TwoPeriodicSolution(xs, xs)]
    if p.theta == 1.0:
        return out
    quad = iterate_bounds(p, max_iter=20_000, tol=1e-13)
    lo = quad.z1_lo * (1 - 1e-9)
    if not lo < xs * (1 - 1e-9):
        return out
    h = lambda x: _phi(_phi(x, p), p) - x
    # linear cells plus a geometric cluster that resolves cycles born near x*
    lin = np.linspace(lo, xs, n_cells + 1)[:-1]
    near = xs - (xs - lo) * np.geomspace(1e-12, 1.0 / n_cells, 64)
    grid = np.unique(np.concatenate([lin, near]))
    found = scan_roots(h, grid)
    found = [z for z in found if z < xs * (1 - 1e-7)]
    for r in merge(found):
        z = r.value
        out.append(TwoPeriodicSolution(z, _phi(z, p)))
    return out


def count_fixed_points_phi2(p: ModelParams) -> int:
    """Number of fixed points of phi o phi: the diagonal root plus two per 2-cycle."""
    sols = solve_two_periodic(p)
    return 1 + 2 * (len(sols) - 1)


def periodic_field(sol: TwoPeriodicSolution, tree: TreeIndex) -> FieldAssignment:
    """Field ln z_even on even shells and ln z_odd on odd shells, equal in both components."""
    vals = np.where(tree.level % 2 == 0, math.log(sol.z_even), math.log(sol.z_odd))
    return FieldAssignment(tree, vals.copy(), vals.copy())


def hole_density_gap(sol: TwoPeriodicSolution, p: ModelParams, root_degree: int | None = None) -> tuple[float, float]:
    """(P(sigma = 0) at an even site, P(sigma = 0) at an odd site)."""
    from .oracle import marginal_from_boundary_law

    if sol.z_even <= 0 or sol.z_odd <= 0:
        raise DomainError("2-periodic law must be positive")
    ev = marginal_from_boundary_law(sol, p, root_degree, parity="even")
    od = marginal_from_boundary_law(sol, p, root_degree, parity="odd")
    return float(ev[1]), float(od[1])


def theorem_applies(p: ModelParams) -> bool:
    """True when (k, theta, lam) lies in the window where a genuine 2-cycle is guaranteed."""
    return p.theta < 1 and periodic_window(p.k, p.theta).contains(p.lam)


def two_periodic_report(p: ModelParams) -> dict:
    sols = solve_two_periodic(p)
    xs = sols[0].z_even
    return {
        "solutions": [(s.z_even, s.z_odd) for s in sols],
        "genuine_cycles": sum(not s.is_translation_invariant for s in sols),
        "theorem_applies": theorem_applies(p),
        "instability_margin": instability_margin(xs, p),
        "diagonal_unstable": instability_margin(xs, p) < 0,
        "residuals": [two_periodic_residual(s, p) for s in sols],
    }
