import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from wrcayley.critical import (
    anti_turning_points,
    critical_values,
    kappa,
    lambda_cr,
    lambda_cr_anti,
    lambda_cr_prime,
    periodic_threshold,
    s_plus_minus,
    theta_c,
    theta_c_prime,
    theta_cr_anti,
)
from wrcayley.model import DomainError


def test_theta_cr_anti_values():
    assert theta_cr_anti(2) == 17.0
    assert theta_cr_anti(5) == 3.5


def test_ferro_thresholds():
    assert theta_c(2) == 1 / 3
    assert theta_c(4) == 0.6
    assert theta_c_prime(4) == 0.75
    assert theta_c(7) < theta_c_prime(7)


def test_lambda_cr_exact_values():
    assert lambda_cr(2, 0.0) == 2.25
    assert lambda_cr(2, 0.2) == 5.625
    assert lambda_cr(3, 0.0) == 32 / 27
    assert lambda_cr(3, 0.25) == float(Fraction(4, 3) ** 3)
    assert lambda_cr(4, 0.0) == float(Fraction(5, 4) ** 4 / 3)


def test_k8_two_curves():
    lc = lambda_cr(8, 0.1)
    lp = lambda_cr_prime(8, 0.1)
    assert lc == pytest.approx((9 / 8) ** 8 / (7 - 0.9), rel=1e-15)
    assert lp == pytest.approx(1 / (7 - 0.8), rel=1e-15)
    assert lp < lc


def test_lambda_cr_none_beyond_threshold():
    assert lambda_cr(2, 1 / 3) is None
    assert lambda_cr(4, 0.7) is None
    assert lambda_cr_prime(4, 0.75) is None


def test_turning_points_k5_theta5():
    t1, t2 = anti_turning_points(5, 5.0)
    assert t1 == pytest.approx(3 - math.sqrt(6), rel=1e-14)
    assert t2 == pytest.approx(3 + math.sqrt(6), rel=1e-14)


def _kappa_extrema(k, theta):
    """Local extremum values of x -> lambda(x) found on a dense grid, then polished."""
    x = np.geomspace(1e-6, 1e4, 200_001)
    y = np.log(kappa(x, k, theta))
    d = np.diff(y)
    idx = np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0] + 1
    out = []
    for i in idx:
        lo, hi = math.log(x[i - 1]), math.log(x[i + 1])
        sgn = -1.0 if d[i - 1] > 0 else 1.0
        res = minimize_scalar(lambda s: sgn * math.log(kappa(math.exp(s), k, theta)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        out.append(float(kappa(math.exp(res.x), k, theta)))
    return sorted(out)


@pytest.mark.parametrize("k,theta", [(2, 20.0), (3, 9.0), (5, 5.0), (5, 12.0), (8, 3.0)])
def test_lambda_cr_anti_matches_extrema_of_inverse_map(k, theta):
    lo, hi = lambda_cr_anti(k, theta)
    ext = _kappa_extrema(k, theta)
    assert len(ext) == 2
    assert lo == pytest.approx(ext[0], rel=1e-9)
    assert hi == pytest.approx(ext[1], rel=1e-9)


def test_lambda_cr_anti_none_below_threshold():
    assert lambda_cr_anti(5, 3.4) is None
    assert lambda_cr_anti(5, 3.5) is None
    assert len(_kappa_extrema(5, 3.4)) == 0


def test_periodic_threshold_and_s_roots():
    assert periodic_threshold(6) == 1 / 49
    sm, sp = s_plus_minus(6, 0.01)
    assert 0 < sm < sp
    assert kappa(sm, 6, 0.01) < kappa(sp, 6, 0.01)
    assert s_plus_minus(5, 0.0) is None


def test_critical_values_regimes():
    assert critical_values(5, 5.0).regime == "antiferro"
    assert critical_values(2, 0.2).lambda_cr == 5.625
    cv = critical_values(8, 0.1)
    assert cv.regime == "ferro_kge4" and cv.lambda_cr_prime < cv.lambda_cr
    with pytest.raises(DomainError):
        critical_values(1, 0.1)
