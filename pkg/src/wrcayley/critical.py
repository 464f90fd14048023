"""Closed-form critical values in (k, theta, lambda) parameter space.

Rational formulas are evaluated in exact arithmetic, reading ``theta`` as
the shortest decimal that round-trips to the given float. That way inputs
like ``theta=0.2`` give ``lambda_cr(2) == 5.625`` exactly instead of an
answer one ulp off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import DomainError


def _q(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def theta_cr_anti(k: int) -> float:
    """Antiferromagnetic threshold 2((k+1)/(k-1))^2 - 1; multiple TISGMs need theta above it."""
    return float(2 * Fraction(k + 1, k - 1) ** 2 - 1)


def theta_c(k: int) -> float:
    """Ferromagnetic threshold (k-1)/(k+1)."""
    return float(Fraction(k - 1, k + 1))


def theta_c_prime(k: int) -> float:
    """(k-1)/k; above it the gamma map is a contraction."""
    return float(Fraction(k - 1, k))


def lambda_cr(k: int, theta: float) -> float | None:
    """((k+1)/k)^k / (k-1-(k+1)theta); None when theta >= theta_c(k)."""
    if theta >= theta_c(k):
        return None
    den = (k - 1) - (k + 1) * _q(theta)
    if den <= 0:
        return None
    return float(Fraction(k + 1, k) ** k / den)


def lambda_cr_prime(k: int, theta: float) -> float | None:
    if theta >= theta_c_prime(k):
        return None
    den = (k - 1) - k * _q(theta)
    if den <= 0:
        return None
    return float(1 / den)


def anti_turning_points(k: int, theta: float) -> tuple[float, float] | None:
    """Roots t1 < t2 of 2t^2 + [4 - (theta-1)(k-1)]t + theta + 1 = 0, or None."""
    b = 4.0 - (theta - 1.0) * (k - 1)
    c = theta + 1.0
    disc = b * b - 8.0 * c
    if disc <= 0 or b >= 0:
        return None
    sq = math.sqrt(disc)
    # stable pair: the larger-magnitude root first, the other via Vieta
    t2 = (-b + sq) / 4.0
    t1 = c / (2.0 * t2)
    return t1, t2


def nu(t: float, b: float, k: int) -> float:
    """(1/t)((1+t)/(b+t))^k."""
    return math.exp(k * (math.log1p(t) - math.log(b + t)) - math.log(t))


def lambda_cr_anti(k: int, theta: float) -> tuple[float, float] | None:
    """(lambda_cr_2, lambda_cr_1) with lambda_cr_2 < lambda_cr_1, or None if theta <= theta_cr."""
    if theta <= theta_cr_anti(k):
        return None
    tp = anti_turning_points(k, theta)
    if tp is None:
        return None
    vals = []
    for t in tp:
        log_l = (k * math.log(2.0) + math.log(t) - (k + 1) * math.log1p(theta)
                 + k * (math.log(1.0 + theta + 2.0 * t) - math.log(2.0 * (1.0 + t))))
        vals.append(math.exp(log_l))
    # vals[0] comes from the smaller turning point and is the upper curve
    return vals[1], vals[0]


def periodic_threshold(k: int) -> float:
    """(k^2 - 6k + 1)/(k+1)^2."""
    return float(Fraction(k * k - 6 * k + 1, (k + 1) ** 2))


def kappa(x, k: int, theta: float):
    """x ((1+2x)/(1+(1+theta)x))^k: the lambda whose diagonal root is x."""
    x = np.asarray(x, dtype=float)
    out = x * ((1 + 2 * x) / (1 + (1 + theta) * x)) ** k
    return out[()] if out.ndim == 0 else out


def s_plus_minus(k: int, theta: float) -> tuple[float, float] | None:
    disc = (1.0 - theta) * (k * k - 6 * k + 1 - (k + 1) ** 2 * theta)
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    base = k - 3 - (k + 1) * theta
    return (base - sq) / (4 * (1 + theta)), (base + sq) / (4 * (1 + theta))


@dataclass(frozen=True)
class CriticalValues:
    regime: str
    theta_cr_anti: float | None = None
    lambda_cr_anti_low: float | None = None
    lambda_cr_anti_high: float | None = None
    theta_c: float | None = None
    lambda_cr: float | None = None
    theta_c_prime: float | None = None
    lambda_cr_prime: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def critical_values(k: int, theta: float) -> CriticalValues:
    if k < 2:
        raise DomainError("critical values are defined for k >= 2")
    if theta > 1:
        lo_hi = lambda_cr_anti(k, theta)
        return CriticalValues(
            regime="antiferro",
            theta_cr_anti=theta_cr_anti(k),
            lambda_cr_anti_low=lo_hi[0] if lo_hi else None,
            lambda_cr_anti_high=lo_hi[1] if lo_hi else None,
        )
    if theta == 1:
        return CriticalValues(regime="ferro_k2" if k == 2 else "ferro_k3" if k == 3 else "ferro_kge4")
    if k == 2:
        return CriticalValues(regime="ferro_k2", theta_c=theta_c(2), lambda_cr=lambda_cr(2, theta))
    if k == 3:
        return CriticalValues(regime="ferro_k3", theta_c=theta_c(3), lambda_cr=lambda_cr(3, theta))
    return CriticalValues(
        regime="ferro_kge4",
        theta_c=theta_c(k),
        lambda_cr=lambda_cr(k, theta),
        theta_c_prime=theta_c_prime(k),
        lambda_cr_prime=lambda_cr_prime(k, theta),
    )
