"""Directed singular value function and the dimension threshold of power-law radii."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .group import DomainError, Radii

BISECT_TOL = 1e-9


class PhiBranch(enum.Enum):
    THIN_LOW = "thin_t01"    # r1 <= r2, t in [0, 2]
    THIN_HIGH = "thin_t24"   # r1 <= r2, t in [2, 4]
    FLAT_LOW = "flat_t03"    # r1 >= r2, t in [0, 3]
    FLAT_HIGH = "flat_t34"   # r1 >= r2, t in [3, 4]


@dataclass(frozen=True)
class PhiValue:
    t: float
    r: Radii
    value: float
    branch: PhiBranch


@dataclass(frozen=True)
class PowerLawSeq:
    """Radii ``r_n = (n^-alpha, n^-beta)`` for ``n >= 1``."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(float(v)) and v > 0):
                raise DomainError(f"{name}={v} must be positive and finite")

    @property
    def thin(self) -> bool:
        # r1 <= r2 for all large n
        return self.alpha >= self.beta

    def radii(self, n: int) -> Radii:
        return Radii(float(n) ** -self.alpha, float(n) ** -self.beta)


def _check_t(t: float) -> None:
    if not (0.0 <= t <= 4.0):
        raise DomainError(f"t must lie in [0, 4], got {t}")


def phi_branch(t: float, thin: bool) -> PhiBranch:
    if thin:
        return PhiBranch.THIN_LOW if t <= 2.0 else PhiBranch.THIN_HIGH
    return PhiBranch.FLAT_LOW if t <= 3.0 else PhiBranch.FLAT_HIGH


def _phi_formula(t: float, r1: float, r2: float, branch: PhiBranch) -> float:
    if branch is PhiBranch.THIN_LOW:
        return r2**t
    if branch is PhiBranch.THIN_HIGH:
        return r1 ** (t - 2.0) * r2**2
    if branch is PhiBranch.FLAT_LOW:
        return r1**t
    return r1 ** (6.0 - t) * r2 ** (2.0 * (t - 3.0))


def phi(t: float, r: Radii) -> PhiValue:
    """Evaluate the directed singular value function ``Phi^t(r)``."""
    _check_t(t)
    branch = phi_branch(t, r.thin)
    return PhiValue(float(t), r, _phi_formula(float(t), r.r1, r.r2, branch), branch)


def phi_value(t: float, r: Radii) -> float:
    return phi(t, r).value


def _exponent_parts(t, s: PowerLawSeq):
    """Return ``(slope, intercept)`` of the linear piece of ``e`` containing ``t``."""
    a, b = s.alpha, s.beta
    if s.thin:
        if t <= 2:
            return b, 0 * a
        return a, 2 * b - 2 * a
    if t <= 3:
        return a, 0 * a
    return 2 * b - a, 6 * a - 6 * b


def phi_exponent(t: float, s: PowerLawSeq) -> float:
    """``e(t)`` with ``Phi^t(r_n) = n^-e(t)`` for all large ``n``."""
    _check_t(t)
    k, c = _exponent_parts(t, s)
    return float(k) * t + float(c)


@dataclass(frozen=True)
class Threshold:
    value: float
    exact: Fraction | None = None

    def __float__(self) -> float:
        return self.value


def _exact_threshold(s: PowerLawSeq) -> Fraction:
    a = Fraction(s.alpha).limit_denominator(10**6)
    b = Fraction(s.beta).limit_denominator(10**6)
    exact = PowerLawSeq(a, b)
    mid = Fraction(2) if exact.thin else Fraction(3)
    for lo, hi in ((Fraction(0), mid), (mid, Fraction(4))):
        k, c = _exponent_parts((lo + hi) / 2, exact)
        if k * hi + c > 1:
            return max(lo, (1 - c) / k)
    return Fraction(4)


def phi_exponent_exact(t: Fraction, s: PowerLawSeq) -> Fraction:
    k, c = _exponent_parts(t, s)
    return k * t + c


def dimension_threshold(s: PowerLawSeq) -> Threshold:
    """``min(4, inf{t : sum_n Phi^t(r_n) < inf})`` for power-law radii.

    The series converges exactly when ``e(t) > 1``.  The crossing is located by
    bisection on the increasing function ``e``; when the exponents are rational
    the crossing is also solved exactly and the float is snapped to it.
    """
    if phi_exponent(4.0, s) <= 1.0:
        return Threshold(4.0, Fraction(4))
    lo, hi = 0.0, 4.0
    if phi_exponent(0.0, s) > 1.0:
        hi = 0.0
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if phi_exponent(mid, s) > 1.0:
            hi = mid
        else:
            lo = mid
    value = 0.5 * (lo + hi)
    exact = _exact_threshold(s)
    if exact is not None and abs(float(exact) - value) <= BISECT_TOL:
        return Threshold(float(exact), exact)
    return Threshold(value, None)


def series_partial_sum(t: float, s: PowerLawSeq, n_terms: int) -> float:
    """``sum_{n=1}^{N} Phi^t(r_n)`` with exact (fsum) accumulation."""
    _check_t(t)
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    n = np.arange(1, n_terms + 1, dtype=float)
    r1 = n ** -s.alpha
    r2 = n ** -s.beta
    thin = r1 <= r2
    terms = np.where(
        thin,
        r2**t if t <= 2 else r1 ** (t - 2.0) * r2**2,
        r1**t if t <= 3 else r1 ** (6.0 - t) * r2 ** (2.0 * (t - 3.0)),
    )
    return math.fsum(terms)
