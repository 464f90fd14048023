import math

import numpy as np
import pytest
from scipy.optimize import fsolve

from wrcayley.critical import lambda_cr, lambda_cr_anti
from wrcayley.model import BoundaryLawPair, ModelParams, UsageError, exy_residual
from wrcayley.tisgm import (
    classify_phase,
    conj_T,
    conj_a,
    conjecture_scan,
    eq2h_sides,
    solve_diagonal,
    solve_offdiagonal_general,
    solve_offdiagonal_k2,
    solve_offdiagonal_k3,
    solve_tisgm,
)


def bisect(fn, lo, hi, n=200):
    flo = fn(lo)
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def multistart_offdiagonal(p, n=400, seed=0):
    """Distinct off-diagonal laws found by fsolve from random log-starts."""
    rng = np.random.default_rng(seed)
    k, th, ll = p.k, p.theta, math.log(p.lam)

    def g(z):
        u, v = z
        fu = math.log((1 + math.exp(u) + th * math.exp(v)) / (1 + math.exp(u) + math.exp(v)))
        fv = math.log((1 + math.exp(v) + th * math.exp(u)) / (1 + math.exp(u) + math.exp(v)))
        return [u - ll - k * fu, v - ll - k * fv]

    found = []
    for _ in range(n):
        z, info, ier, _msg = fsolve(g, rng.uniform(-6, 6, 2), full_output=True, xtol=1e-14)
        if ier == 1 and max(abs(r) for r in g(z)) < 1e-11 and abs(z[0] - z[1]) > 1e-5:
            x, y = sorted(np.exp(z))
            if not any(abs(x - a) < 1e-7 * a for a, _ in found):
                found.append((x, y))
    return sorted(found)


# diagonal

def test_diagonal_theta_one():
    assert solve_diagonal(ModelParams(4, 1.0, 3.3)) == [3.3]


@pytest.mark.parametrize("k,theta,lam", [(2, 0.0, 3.0), (3, 0.4, 0.2), (6, 0.9, 50.0), (2, 0.2, 6.0)])
def test_diagonal_ferro_matches_bisection(k, theta, lam):
    F = lambda x: x - lam * ((1 + x + theta * x) / (1 + 2 * x)) ** k
    ref = bisect(F, 0.0, lam)
    (x,) = solve_diagonal(ModelParams(k, theta, lam))
    assert x == pytest.approx(ref, rel=1e-13)


def test_diagonal_hardcore_k2_value():
    x = solve_diagonal(ModelParams(2, 0.0, 3.0))[0]
    assert x == pytest.approx(1.2422486478492056, rel=1e-14)


def test_antiferro_k5_three_roots_between_curves():
    lo, hi = lambda_cr_anti(5, 5.0)
    p = ModelParams(5, 5.0, math.sqrt(lo * hi))
    xs = solve_diagonal(p)
    assert len(xs) == 3
    for x in xs:
        assert exy_residual(BoundaryLawPair(x, x), p) < 1e-11
    assert len(solve_diagonal(p.with_lam(lo * 0.9))) == 1
    assert len(solve_diagonal(p.with_lam(hi * 1.1))) == 1


@pytest.mark.parametrize("which", [0, 1])
def test_k2_antiferro_two_roots_on_each_curve(which):
    curve = lambda_cr_anti(2, 30.0)[which]
    assert len(solve_diagonal(ModelParams(2, 30.0, curve))) == 2


# off-diagonal closed forms

def test_k2_hardcore_lambda3_pair():
    p = ModelParams(2, 0.0, 3.0)
    (bl,) = solve_offdiagonal_k2(p)
    assert bl.x == pytest.approx(0.42208244038545345, rel=1e-12)
    assert bl.y == pytest.approx(2.369205407092467, rel=1e-12)
    assert exy_residual(bl, p) < 1e-11
    ref = multistart_offdiagonal(p)
    assert len(ref) == 1
    assert ref[0] == pytest.approx(bl.as_tuple(), rel=1e-10)


def test_k2_double_root_at_tangency():
    (bl,) = solve_offdiagonal_k2(ModelParams(2, 0.0, 2.25))
    assert bl.is_diagonal


def test_k2_empty_below_curve():
    assert solve_offdiagonal_k2(ModelParams(2, 0.2, 5.0)) == []


def test_k2_softcore_pair_against_multistart():
    p = ModelParams(2, 0.2, 6.0)
    (bl,) = solve_offdiagonal_k2(p)
    assert bl.as_tuple() == pytest.approx(multistart_offdiagonal(p)[0], rel=1e-10)


def test_k3_hardcore_pair():
    p = ModelParams(3, 0.0, 1.5)
    (bl,) = solve_offdiagonal_k3(p)
    assert bl.x > 0 and bl.y > 0 and bl.x != bl.y
    assert exy_residual(bl, p) < 1e-11
    s = bl.x ** (1 / 3) + bl.y ** (1 / 3)
    assert (1 - 2 * p.theta) * s ** 3 - 4 > 0
    assert bl.as_tuple() == pytest.approx(multistart_offdiagonal(p)[0], rel=1e-10)


def test_k3_threshold():
    assert solve_offdiagonal_k3(ModelParams(3, 0.0, 32 / 27 * 0.999)) == []
    assert len(solve_offdiagonal_k3(ModelParams(3, 0.0, 32 / 27 * 1.001))) == 1


def test_closed_form_solvers_reject_wrong_k():
    with pytest.raises(UsageError):
        solve_offdiagonal_k2(ModelParams(3, 0.0, 3.0))
    with pytest.raises(UsageError):
        solve_offdiagonal_k3(ModelParams(2, 0.0, 3.0))


@pytest.mark.parametrize("k,theta,lam", [(2, 0.0, 3.0), (2, 0.2, 6.0), (2, 0.1, 40.0),
                                         (3, 0.0, 1.5), (3, 0.3, 9.0), (3, 0.1, 100.0)])
def test_general_solver_reproduces_closed_forms(k, theta, lam):
    p = ModelParams(k, theta, lam)
    closed = solve_offdiagonal_k2(p) if k == 2 else solve_offdiagonal_k3(p)
    general = solve_offdiagonal_general(p)
    assert len(general) == len(closed) == 1
    assert sorted(general[0].as_tuple()) == pytest.approx(sorted(closed[0].as_tuple()), rel=1e-9)


def test_general_solver_k4():
    assert solve_offdiagonal_general(ModelParams(4, 0.8, 100.0)) == []
    p = ModelParams(4, 0.0, 1.05 * (5 / 4) ** 4 / 3)
    pairs = solve_offdiagonal_general(p)
    assert len(pairs) >= 1
    assert all(exy_residual(bl, p) < 1e-11 for bl in pairs)


def test_antiferro_has_no_offdiagonal_sign_argument():
    rng = np.random.default_rng(5)
    for _ in range(500):
        k = int(rng.integers(2, 9))
        x, y = np.exp(rng.uniform(-5, 5, 2))
        lhs, rhs = eq2h_sides(BoundaryLawPair(x, y), ModelParams(k, float(rng.uniform(1.01, 30)), 2.0))
        assert lhs > 0 > rhs


# solution sets and classification

def test_solution_set_hardcore_k2():
    sols = solve_tisgm(ModelParams(2, 0.0, 3.0))
    assert sols.method == "closed_form_k2"
    assert sols.n_solutions == 3
    assert len(sols.all_laws()) == 3
    assert sols.residual < 1e-12


def test_classify_hardcore_k2():
    assert classify_phase(ModelParams(2, 0.0, 2.0)).count == 1
    assert classify_phase(ModelParams(2, 0.0, 3.0)).count == 3


def test_classify_antiferro_k5():
    lo, hi = lambda_cr_anti(5, 5.0)
    assert classify_phase(ModelParams(5, 5.0, math.sqrt(lo * hi))).count == 3
    assert classify_phase(ModelParams(5, 5.0, lo)).count == 2
    assert classify_phase(ModelParams(5, 5.0, hi)).count == 2
    assert classify_phase(ModelParams(5, 5.0, hi * 3)).count == 1


def test_classify_k4_contraction_regime():
    rep = classify_phase(ModelParams(4, 0.9, 5.0))
    assert rep.count == 1 and rep.consistent


def test_classify_k4_above_curve():
    lc = lambda_cr(4, 0.1)
    rep = classify_phase(ModelParams(4, 0.1, 1.2 * lc))
    assert rep.count == "at_least_3" and rep.consistent


def test_phase_report_dict_round_trip():
    d = classify_phase(ModelParams(3, 0.2, 5.0)).as_dict()
    assert {"count", "deciding_theorem", "critical", "diagonal", "offdiagonal", "residual"} <= set(d)


# exactness scan for k >= 4

def test_conjecture_formulas_symmetric():
    rng = np.random.default_rng(1)
    for _ in range(100):
        u, v = rng.uniform(0.1, 3, 2)
        k = int(rng.integers(4, 9))
        assert conj_a(u, v, k) == pytest.approx(conj_a(v, u, k), rel=1e-13)
        assert conj_T(u, v, k) == pytest.approx(conj_T(v, u, k), rel=1e-12, abs=1e-13)


def test_conjecture_scan_k4_hardcore():
    rep = conjecture_scan(4, 0.0, grid=12)
    assert rep["a_critical"] == pytest.approx(5 / 4 * 3 ** (-1 / 4), rel=1e-14)
    assert rep["peak_at_diagonal"]
    assert rep["supports_conjecture"]


def test_conjecture_scan_k10():
    rep = conjecture_scan(10, 0.05, grid=10)
    assert rep["supports_conjecture"]


def test_conjecture_scan_rejects_small_k():
    with pytest.raises(UsageError):
        conjecture_scan(3, 0.0, grid=10)
