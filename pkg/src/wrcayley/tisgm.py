"""Translation-invariant boundary laws: solvers, critical curves, phase classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import roots
from .critical import (
    CriticalValues,
    anti_turning_points,
    critical_values,
    lambda_cr,
    theta_c,
)
from .model import (
    BoundaryLawPair,
    ModelParams,
    UsageError,
    exy_residual,
)

__all__ = [
    "CriticalValues",
    "PhaseReport",
    "TisgmSolutionSet",
    "classify_phase",
    "conjecture_scan",
    "critical_values",
    "eq2h_sides",
    "solve_diagonal",
    "solve_offdiagonal_general",
    "solve_offdiagonal_k2",
    "solve_offdiagonal_k3",
    "solve_tisgm",
]

ON_CURVE_BAND = 1e-9
_TANGENT_TOL = 1e-12


def _diag_log_residual(x: float, p: ModelParams) -> float:
    # ln x - ln lam - k ln((1+(1+theta)x)/(1+2x)); increasing for theta <= 1
    return (math.log(x) - p.log_lam
            - p.k * (math.log1p((1.0 + p.theta) * x) - math.log1p(2.0 * x)))


def diagonal_roots(p: ModelParams) -> list[roots.Root]:
    """Roots of x = lam ((1+(1+theta)x)/(1+2x))^k, with tangencies flagged."""
    lam, th, k = p.lam, p.theta, p.k
    if th == 1.0:
        return [roots.Root(lam)]
    edge = lam * ((1.0 + th) / 2.0) ** k
    lo, hi = min(lam, edge), max(lam, edge)
    fn = lambda x: _diag_log_residual(x, p)
    if th < 1.0:
        return [roots.Root(roots.refine(fn, lo, hi))]

    # antiferro: monotone between the turning points of the t-substitution
    tangent = []
    inner = []
    tp = anti_turning_points(k, th)
    for t in tp or ():
        x = t / (1.0 + th)
        if lo < x < hi:
            inner.append(x)
            if abs(fn(x)) <= _TANGENT_TOL:
                tangent.append(x)
    breaks = [lo] + inner + [hi]
    found = [roots.Root(x, double=True) for x in tangent]
    for a, b in zip(breaks[:-1], breaks[1:]):
        if a in tangent or b in tangent:
            continue
        fa, fb = fn(a), fn(b)
        if fa == 0.0:
            found.append(roots.Root(a))
        elif fa * fb < 0:
            found.append(roots.Root(roots.refine(fn, a, b)))
    return sorted(found, key=lambda r: r.value)


def solve_diagonal(p: ModelParams) -> list[float]:
    """All x > 0 with x = lam((1+(1+theta)x)/(1+2x))^k, ascending."""
    return [r.value for r in diagonal_roots(p)]


def k2_g(theta: float, lam: float) -> tuple[float, float]:
    """Both branches of 1 + x + y for off-diagonal k=2 laws; the first is the physical one."""
    sq = math.sqrt(lam * lam * (1 + theta) ** 2 + 4 * lam)
    base = lam * (1 - theta * theta)
    return (base + (1 - theta) * sq) / 2.0, (base - (1 - theta) * sq) / 2.0


def solve_offdiagonal_k2(p: ModelParams) -> list[BoundaryLawPair]:
    """Off-diagonal k=2 laws from the closed-form sum 1+x+y = g(theta, lam).

    Returns [] (no solution), [(x*, x*)] at the tangency lam = lambda_cr(2), or
    [(x1*, x2*)] with x1* < x2*; (x2*, x1*) is the implied swap partner.
    """
    if p.k != 2:
        raise UsageError("solve_offdiagonal_k2 needs k = 2")
    th, lam = p.theta, p.lam
    if th >= 1.0:
        return []
    g, g_minus = k2_g(th, lam)
    if g_minus > 0:
        raise RuntimeError(f"discarded root branch 1+x+y = {g_minus} is positive")
    c0 = 1.0 + th * (g - 1.0)
    qa = lam * (1.0 - th) ** 2
    qb = 2.0 * lam * (1.0 - th) * c0 - g * g
    qc = lam * c0 * c0
    disc = qb * qb - 4.0 * qa * qc
    if abs(disc) <= _TANGENT_TOL * qb * qb:
        x = -qb / (2.0 * qa)
        y = g - 1.0 - x
        return [BoundaryLawPair(x, y)] if x > 0 and y > 0 else []
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    x2 = (-qb + sq) / (2.0 * qa) if qb < 0 else (-qb - sq) / (2.0 * qa)
    x1 = qc / (qa * x2)
    x1, x2 = sorted((x1, x2))
    if x1 <= 0 or g - 1.0 - x1 <= 0 or x2 <= 0 or g - 1.0 - x2 <= 0:
        return []
    return [BoundaryLawPair(x1, x2)]


def _eta(s: float, theta: float) -> float:
    s3 = s ** 3
    return s * (s3 - 2.0) / ((1.0 + theta) * s3 - 1.0)


def solve_offdiagonal_k3(p: ModelParams) -> list[BoundaryLawPair]:
    """Off-diagonal k=3 laws via the sum/product reduction s = u+v, uv = p(s)."""
    if p.k != 3:
        raise UsageError("solve_offdiagonal_k3 needs k = 3")
    th, a = p.theta, p.a
    if th >= 0.5:
        return []
    s0 = (4.0 / (1.0 - 2.0 * th)) ** (1.0 / 3.0)
    a_min = 2.0 * s0 / 3.0
    if abs(a - a_min) <= _TANGENT_TOL * a_min:
        u = s0 / 2.0
        return [BoundaryLawPair(u ** 3, u ** 3)]
    if a < a_min:
        return []
    fn = lambda s: _eta(s, th) - a
    hi = roots.grow_upper(fn, s0, 2.0 * s0 + 2.0 * (1.0 + th) * a)
    s = roots.refine(fn, s0, hi)
    prod = (1.0 + th * s ** 3) / ((1.0 + 2.0 * th) * s)
    disc = max(s * s - 4.0 * prod, 0.0)
    u = (s + math.sqrt(disc)) / 2.0
    v = prod / u
    return [BoundaryLawPair(v ** 3, u ** 3)]


def gamma_map(u, p: ModelParams):
    a, th = p.a, p.theta
    return a * (1.0 + th) - u + (u - a * th) / (1.0 + u ** p.k)


def solve_offdiagonal_general(p: ModelParams, n_starts: int = 256) -> list[BoundaryLawPair]:
    """Off-diagonal laws for any k >= 2 as 2-cycles of the gamma map on [a theta, a].

    gamma is decreasing there, so every 2-cycle has exactly one point below
    the diagonal fixed point xi; the sweep covers [a theta, xi) only.
    """
    if p.k < 2:
        raise UsageError("solve_offdiagonal_general needs k >= 2")
    if p.theta >= 1.0:
        return []
    k, a, th = p.k, p.a, p.theta
    xi = solve_diagonal(p)[0] ** (1.0 / k)
    lo = a * th
    h = lambda u: gamma_map(gamma_map(u, p), p) - u
    grid = np.linspace(lo, xi, n_starts + 1)[:-1]
    near = xi - (xi - lo) * np.logspace(-3, -12, 19)
    grid = np.unique(np.concatenate([grid, near]))
    found = [u for u in roots.scan_roots(h, grid) if abs(u - xi) > roots.MERGE_RTOL * xi]
    out = []
    for r in roots.merge(found):
        u0 = r.value
        v0 = gamma_map(u0, p)
        out.append(BoundaryLawPair(u0 ** k, v0 ** k))
    return out


def eq2h_sides(bl: BoundaryLawPair, p: ModelParams) -> tuple[float, float]:
    """(LHS, RHS) of (1+x+y)^k = lam(1-theta) sum_j (1+x+theta y)^(k-1-j) (1+theta x+y)^j."""
    x, y, th, k = bl.x, bl.y, p.theta, p.k
    A, B = 1 + x + th * y, 1 + th * x + y
    rhs = p.lam * (1 - th) * sum(A ** (k - 1 - j) * B ** j for j in range(k))
    return (1 + x + y) ** k, rhs


@dataclass
class TisgmSolutionSet:
    diagonal: list[BoundaryLawPair]
    offdiagonal: list[BoundaryLawPair]
    method: str
    residual: float
    double_root: bool = False

    @property
    def n_solutions(self) -> int:
        return len(self.diagonal) + 2 * len(self.offdiagonal)

    def all_laws(self) -> list[BoundaryLawPair]:
        out = list(self.diagonal)
        for bl in self.offdiagonal:
            out += [bl, bl.swapped()]
        return out


def solve_tisgm(p: ModelParams, n_starts: int = 256) -> TisgmSolutionSet:
    droots = diagonal_roots(p)
    diag = [BoundaryLawPair(r.value, r.value) for r in droots]
    double = any(r.double for r in droots)
    if p.theta >= 1.0:
        method, off = "scalar_antiferro", []
    elif p.k == 2:
        method, off = "closed_form_k2", solve_offdiagonal_k2(p)
    elif p.k == 3:
        method, off = "sp_reduction_k3", solve_offdiagonal_k3(p)
    else:
        method, off = "general_numeric", solve_offdiagonal_general(p, n_starts)
    kept = []
    for bl in off:
        if abs(bl.x - bl.y) <= roots.MERGE_RTOL * max(bl.x, bl.y):
            double = True  # tangency: coincides with the diagonal law
        else:
            kept.append(bl)
    laws = diag + kept
    res = max(exy_residual(bl, p) for bl in laws)
    return TisgmSolutionSet(diag, kept, method, res, double)


@dataclass
class PhaseReport:
    count: int | str
    deciding_theorem: str
    critical: CriticalValues
    solutions: TisgmSolutionSet
    certified_unique: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        n = self.solutions.n_solutions
        if self.count == "at_least_1":
            return n >= 1
        if self.count == "at_least_3":
            return n >= 3
        return n == self.count

    def as_dict(self) -> dict:
        sols = self.solutions
        return {
            "count": self.count,
            "deciding_theorem": self.deciding_theorem,
            "critical": self.critical.as_dict(),
            "method": sols.method,
            "diagonal": [bl.as_tuple() for bl in sols.diagonal],
            "offdiagonal": [bl.as_tuple() for bl in sols.offdiagonal],
            "residual": sols.residual,
            "certified_unique": self.certified_unique,
            "consistent": self.consistent,
        }


def _near(x: float, ref: float, band: float) -> bool:
    return abs(x - ref) <= band * ref


def classify_phase(p: ModelParams, band: float = ON_CURVE_BAND) -> PhaseReport:
    """Count TISGMs by evaluating the deciding theorem's closed-form inequalities."""
    k, th, lam = p.k, p.theta, p.lam
    if k < 2:
        raise UsageError("classify_phase needs k >= 2")
    cv = critical_values(k, th)
    sols = solve_tisgm(p)
    cert = None

    if th > 1.0:
        thm = "t_gt"
        lo, hi = cv.lambda_cr_anti_low, cv.lambda_cr_anti_high
        if lo is None:
            count = 1
        elif _near(lam, lo, band) or _near(lam, hi, band):
            count = 2
        elif lo < lam < hi:
            count = 3
        else:
            count = 1
    elif th == 0.0:
        thm = "hardcore_RKh"
        lc = lambda_cr(k, 0.0)
        if lam <= lc or _near(lam, lc, band):
            count = 1
        else:
            count = 3 if k in (2, 3) else "at_least_3"
    elif k in (2, 3):
        thm = "t_lt" if k == 2 else "tk3"
        lc = cv.lambda_cr
        if lc is None or lam <= lc or _near(lam, lc, band):
            count = 1
        else:
            count = 3
    else:
        lc, lcp = cv.lambda_cr, cv.lambda_cr_prime
        if th >= cv.theta_c_prime or (lam < lcp and not _near(lam, lcp, band)):
            thm, count = "tkk_1", 1
        elif lc is None or lam <= lc or _near(lam, lc, band):
            thm, count = "tkk_2", "at_least_1"
            from .brackets import uniqueness_certificate
            cert = (not sols.offdiagonal) and uniqueness_certificate(p).certified
        else:
            thm, count = "tkk_3", "at_least_3"
    return PhaseReport(count, thm, cv, sols, cert)


def conj_a(u, v, k: int):
    """a(u, v) from the linear system in (a, a theta)."""
    num = sum(u ** (k - j) * v ** j for j in range(k + 1))
    den = sum(u ** (k - 1 - j) * v ** j for j in range(k))
    return num / den


def conj_T(u, v, k: int):
    """T(u, v) = a theta from the linear system in (a, a theta)."""
    inner = sum(u ** (k - 2 - j) * v ** j for j in range(k - 1))
    den = sum(u ** (k - 1 - j) * v ** j for j in range(k))
    return (u * v * inner - 1.0) / den


def _T_on_level(r, a: float, k: int):
    # level set a(u, v) = a parametrised by r = v/u in (0, 1]
    r = np.asarray(r, dtype=float)
    s_k = sum(r ** j for j in range(k + 1))
    s_km1 = sum(r ** j for j in range(k))
    u = a * s_km1 / s_k
    return conj_T(u, r * u, k)


def conjecture_scan(k: int, theta: float, grid: int, n_r: int = 4096) -> dict:
    """Numerical probe of the exactness conjecture for k >= 4.

    For each a on a grid around the critical a, T = a theta is scanned along
    the level curve a(u, v) = a, v = r u, r in (0, 1). Off-diagonal laws at
    (a, theta) are exactly the crossings T(r) = a theta. The conjecture holds on
    the scan when T(r) peaks at r -> 1 (u = v = ak/(k+1)), so that there is one
    crossing above lambda_cr and none below, and the gamma-map solver agrees.
    Exploratory only; nothing else in the package consumes it.
    """
    if k < 4:
        raise UsageError("conjecture_scan needs k >= 4")
    if not 0.0 <= theta < theta_c(k):
        raise UsageError("conjecture_scan needs 0 <= theta < (k-1)/(k+1)")
    if grid < 8:
        raise UsageError("conjecture_scan needs grid >= 8")
    lc = lambda_cr(k, theta)
    a_cr = lc ** (1.0 / k)
    a_values = a_cr * np.geomspace(0.5, 2.0, grid)
    r = np.concatenate([np.linspace(0.0, 1.0, n_r + 1)[1:-1], 1.0 - np.logspace(-4, -9, 12)])
    rows = []
    for a in a_values:
        T = _T_on_level(r, a, k)
        target = a * theta
        crossings = int(np.count_nonzero(np.sign(T[:-1] - target) * np.sign(T[1:] - target) < 0))
        i = int(np.argmax(T))
        left, right = r[max(i - 1, 0)], r[min(i + 1, len(r) - 1)]
        opt = minimize_scalar(lambda q: -_T_on_level(q, a, k), bounds=(left, right), method="bounded",
                              options={"xatol": 1e-12})
        r_star = float(opt.x) if -opt.fun >= T[i] else float(r[i])
        lam = a ** k
        predicted = lam > lc
        solver_pairs = len(solve_offdiagonal_general(ModelParams(k, theta, lam)))
        rows.append({
            "a": float(a),
            "lambda": float(lam),
            "crossings": crossings,
            "predicted_offdiagonal": bool(predicted),
            "solver_pairs": solver_pairs,
            "argmax_r": r_star,
            "T_sup": float(_T_on_level(1.0, a, k)),
            "agrees": crossings == int(predicted) and solver_pairs == crossings,
        })
    resolution = float(np.max(np.diff(r)))
    peak_at_diagonal = all(1.0 - row["argmax_r"] <= resolution for row in rows)
    return {
        "k": k,
        "theta": theta,
        "a_critical": a_cr,
        "u_critical": a_cr * k / (k + 1),
        "rows": rows,
        "peak_at_diagonal": peak_at_diagonal,
        "supports_conjecture": peak_at_diagonal and all(row["agrees"] for row in rows),
    }
