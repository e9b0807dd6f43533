"""Riesz energies of uniform measures on rectangles and balls.

``I_t(Omega) = int_Omega int_Omega d(x, y)^-t dy dx`` is estimated as ``V * E[w]``
where ``X`` is uniform on ``Omega`` (volume ``V``) and, given ``X``, ``Y`` is
drawn from a defensive mixture: with probability 1/2 uniform on ``Omega``,
otherwise ``Y = X w`` with ``w`` drawn from a density proportional to
``|w|^-t`` on a gauge ball of radius ``D_j``, one of a dyadic ladder of scales.
The importance weight

    w = 1_Omega(Y) d^-t / m(Y | X)

is bounded (by twice the normaliser of the smallest scale), so the estimator
has finite variance for every ``t < 4``.  ``method="uniform"`` gives the
textbook estimator with ``Y`` uniform on ``Omega``; its variance is infinite
for ``t >= 2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .group import (
    UNIT_BALL_VOLUME,
    DomainError,
    Radii,
    _mul,
    _norm,
    _sample_rect_local,
    ball_volume,
    dist,
    rect_diameter_bound,
    rect_volume,
    sample_ball,
)
from .rng import as_rng, make_rng

CHUNK = 1 << 16
EXCLUDED_T = (1.0, 2.0, 3.0)
# Surface measure of the unit gauge sphere in homogeneous polar coordinates.
SPHERE_MEASURE = 4.0 * UNIT_BALL_VOLUME


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    stderr: float
    n_pairs: int
    t: float
    seed: int
    method: str = "mixture"
    resampled: int = 0

    @property
    def rel_err(self) -> float:
        return self.stderr / self.value


class BoundCase(enum.Enum):
    THIN_LOW = "thin_t<2"
    THIN_HIGH = "thin_t>2"
    FLAT_LOW = "flat_t<3"
    FLAT_HIGH = "flat_t>3"


@dataclass(frozen=True)
class EnergyBound:
    t: float
    r: Radii
    bound: float
    case_tag: BoundCase


def _check_t(t: float) -> None:
    if not (0.0 < t < 4.0):
        raise DomainError(f"energy exponent t must lie in (0, 4), got {t}")


def _unit_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    # Radial projection of a uniform ball sample is distributed as the
    # normalised sphere measure, independent of the radius.
    w = sample_ball((0.0, 0.0, 0.0), 1.0, rng, n)
    s = _norm(w)
    return np.stack([w[:, 0] / s, w[:, 1] / s, w[:, 2] / (s * s)], axis=-1)


def _singular_offsets(t: float, scales: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    u = _unit_sphere(rng, n)
    s = scales * rng.random(n) ** (1.0 / (4.0 - t))
    return np.stack([s * u[:, 0], s * u[:, 1], s * s * u[:, 2]], axis=-1)


def _energy(sampler, contains, volume, diam, floor_scale, t, n_pairs, seed, stream, method):
    _check_t(t)
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    if method not in ("mixture", "uniform"):
        raise ValueError(f"unknown method {method!r}")
    levels = max(0, math.ceil(math.log2(diam / floor_scale)))
    scales = diam * 2.0 ** -np.arange(levels + 1)
    inv_norm = (4.0 - t) / (SPHERE_MEASURE * scales ** (4.0 - t))
    n_comp = levels + 1
    weights = []
    resampled = 0
    done, chunk_id = 0, 0
    while done < n_pairs:
        m = min(CHUNK, n_pairs - done)
        rng = make_rng(seed, *stream, chunk_id)
        x = sampler(rng, m)
        y = sampler(rng, m)
        if method == "uniform":
            d = _norm(_mul(-x, y))
            bad = d == 0.0
            while bad.any():
                resampled += int(bad.sum())
                y[bad] = sampler(rng, int(bad.sum()))
                d = _norm(_mul(-x, y))
                bad = d == 0.0
            weights.append(volume * d ** (-t))
        else:
            comp = rng.integers(0, 2 * n_comp, m)
            sing = comp >= n_comp
            k = int(sing.sum())
            offs = _singular_offsets(t, scales[comp[sing] - n_comp], rng, k)
            y[sing] = _mul(x[sing], offs)
            d = _norm(_mul(-x, y))
            # mixture density times d^t; finite at d = 0
            dens = 0.5 * d**t / volume + (0.5 / n_comp) * np.sum(
                np.where(d[:, None] <= scales[None, :], inv_norm[None, :], 0.0), axis=1
            )
            weights.append(np.where(contains(y), 1.0 / dens, 0.0))
        done += m
        chunk_id += 1
    w = np.concatenate(weights)
    mean = float(np.sum(w)) / len(w)
    sd = float(np.std(w, ddof=1)) if len(w) > 1 else 0.0
    return EnergyEstimate(
        value=volume * mean,
        stderr=volume * sd / math.sqrt(len(w)),
        n_pairs=n_pairs,
        t=float(t),
        seed=int(seed),
        method=method,
        resampled=resampled,
    )


def riesz_energy_rect(
    r: Radii,
    t: float,
    n_pairs: int = 100_000,
    seed: int = 0,
    stream: tuple[int, ...] = (),
    method: str = "mixture",
) -> EnergyEstimate:
    """Monte Carlo estimate of the t-energy of Lebesgue measure on ``R(0, r)``.

    The energy is left-invariant, so the centre of the rectangle is immaterial.
    Randomness comes from ``make_rng(seed, *stream, chunk)`` per block of
    ``CHUNK`` pairs.
    """
    r1, r2 = r.r1, r.r2
    half_h = r2 * r2

    def sampler(rng, m):
        return _sample_rect_local(r1, r2, rng, m)

    def contains(p):
        return (p[:, 0] ** 2 + p[:, 1] ** 2 <= r1 * r1) & (np.abs(p[:, 2]) <= half_h)

    # finest scale at which the kernel still sees the rectangle's shape
    floor_scale = min(r1, r2 * r2 / r1)
    return _energy(sampler, contains, rect_volume(r), rect_diameter_bound(r), floor_scale, t, n_pairs, seed, stream, method)


def riesz_energy_ball(
    rho: float,
    t: float,
    n_pairs: int = 100_000,
    seed: int = 0,
    stream: tuple[int, ...] = (),
    method: str = "mixture",
) -> EnergyEstimate:
    """Monte Carlo t-energy of Lebesgue measure on the gauge ball ``B(0, rho)``."""
    if not (math.isfinite(rho) and rho > 0):
        raise DomainError(f"ball radius must be positive, got {rho}")

    def sampler(rng, m):
        return sample_ball((0.0, 0.0, 0.0), rho, rng, m)

    def contains(p):
        return _norm(p) <= rho

    return _energy(sampler, contains, ball_volume(rho), 2.0 * rho, rho, t, n_pairs, seed, stream, method)


def _bound_formula(t: float, r1: float, r2: float, thin: bool) -> tuple[float, BoundCase]:
    if thin:
        if t < 2.0:
            return r1**4 * r2 ** (4.0 - t), BoundCase.THIN_LOW
        return r1 ** (6.0 - t) * r2**2, BoundCase.THIN_HIGH
    if t < 3.0:
        return r1 ** (4.0 - t) * r2**4, BoundCase.FLAT_LOW
    return r1 ** (t - 2.0) * r2 ** (2.0 * (5.0 - t)), BoundCase.FLAT_HIGH


def energy_bound_rect(t: float, r: Radii) -> EnergyBound:
    """Closed-form order of magnitude of ``I_t(R(0, r))``.

    The true energy is bounded above by a t-dependent multiple of this value.
    At ``t`` in {1, 2, 3} the integrals pick up logarithmic factors and no
    power-law form exists, so those exponents are rejected.
    """
    _check_t(t)
    if t in EXCLUDED_T:
        raise DomainError(
            f"t={t} is a logarithmic-correction breakpoint (t in {{1, 2, 3}}); no power-law energy bound"
        )
    value, tag = _bound_formula(float(t), r.r1, r.r2, r.thin)
    return EnergyBound(t=float(t), r=r, bound=value, case_tag=tag)


def capacity_lower_bound(r: Radii, t: float, e: EnergyEstimate) -> float:
    """``lambda(R)^2 / I_t(R)``: the capacity witnessed by the normalised uniform measure."""
    if not e.value > 0:
        raise DomainError("energy estimate must be positive")
    return rect_volume(r) ** 2 / e.value


def box_kernel(rho: float, q) -> float | np.ndarray:
    """``max(|x|, |y|, |z - 2 rho y|^(1/2))``, a Euclidean-box proxy for ``d((rho,0,0), .)``."""
    a = np.asarray(q, dtype=float)
    out = np.maximum(
        np.maximum(np.abs(a[..., 0]), np.abs(a[..., 1])),
        np.sqrt(np.abs(a[..., 2] - 2.0 * rho * a[..., 1])),
    )
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ComparabilityReport:
    min_ratio: float
    max_ratio: float
    n_samples: int
    resampled: int


def kernel_comparability(rho: float, z0: float, n_samples: int = 10_000, rng=None, r: Radii = Radii(1.0, 1.0)):
    """Extremes of ``d(p, q) / f_rho(q - p)`` for ``p = (rho, 0, z0)`` and ``q``
    uniform in the Euclidean box ``p + [-2r1, 2r1]^2 x [-2r2^2, 2r2^2]``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = as_rng(rng)
    p = np.array([rho, 0.0, z0])
    half = np.array([2.0 * r.r1, 2.0 * r.r1, 2.0 * r.r2**2])
    q = p + half * (2.0 * rng.random((n_samples, 3)) - 1.0)
    resampled = 0
    while True:
        bad = np.all(q == p, axis=1)
        if not bad.any():
            break
        resampled += int(bad.sum())
        q[bad] = p + half * (2.0 * rng.random((int(bad.sum()), 3)) - 1.0)
    ratio = dist(p, q) / box_kernel(rho, q - p)
    return ComparabilityReport(float(ratio.min()), float(ratio.max()), n_samples, resampled)
