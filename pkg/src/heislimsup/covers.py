"""Explicit ball covers of rectangles and the Hausdorff-content bounds they give.

Three constructions:

* trivial   one ball around the origin containing the whole rectangle;
* segment   balls of radius ``2 r1`` on the vertical segment, spaced ``r1^2``
            apart (thin rectangles, ``r1 <= r2``);
* annulus   for flat rectangles (``r1 >= r2``): a segment net of
            ``R(0, (r2, r2))`` plus, on each circle of radius ``rho_k = r2 sqrt(k)``,
            an angular net of balls of radius ``3 r2^2 / rho_k``.

Annulus covers may hold ~``(r1/r2)^6`` balls, so ring nets are stored by their
parameters; counts and content sums are analytic and the nearest-centre search
used by :func:`verify_density` only visits the few angular neighbours that
can matter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .group import (
    DomainError,
    HeisPoint,
    HeisRect,
    Radii,
    _mul,
    _norm,
    rect_diameter_bound,
    sample_rect,
)
from .rng import as_rng

RING_RADIUS_FACTOR = 3.0
CEIL_GUARD = 1e-12


class Construction(enum.Enum):
    TRIVIAL = "trivial"
    SEGMENT_NET = "segment_net"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class CoverElement:
    center: HeisPoint
    radius: float

    @property
    def diameter_bound(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class PointFamily:
    """Balls of a common radius at explicitly listed centres."""

    centers: np.ndarray
    radius: float

    @property
    def count(self) -> int:
        return len(self.centers)

    def iter_centers(self) -> Iterator[np.ndarray]:
        yield from self.centers

    def nearest(self, q: np.ndarray) -> np.ndarray:
        best = np.full(len(q), np.inf)
        for c in self.centers:
            best = np.minimum(best, _norm(_mul(-c, q)))
        return best


@dataclass(frozen=True)
class SegmentFamily:
    """Balls centred at ``(0, 0, k h)`` for ``k = -m .. m``."""

    spacing: float
    m: int
    radius: float

    @property
    def count(self) -> int:
        return 2 * self.m + 1

    def iter_centers(self) -> Iterator[np.ndarray]:
        for k in range(-self.m, self.m + 1):
            yield np.array([0.0, 0.0, k * self.spacing])

    def nearest(self, q: np.ndarray) -> np.ndarray:
        k0 = np.rint(q[:, 2] / self.spacing)
        best = np.full(len(q), np.inf)
        for o in (-1, 0, 1):
            k = np.clip(k0 + o, -self.m, self.m)
            c = np.stack([np.zeros_like(k), np.zeros_like(k), k * self.spacing], axis=-1)
            best = np.minimum(best, _norm(_mul(-c, q)))
        return best


@dataclass(frozen=True)
class RingFamily:
    """Points ``(rho cos(j a), rho sin(j a), 0)``, ``a = eps^2 / (2 rho^2)``,
    ``j = 0 .. floor(4 pi rho^2 / eps^2)``: an ``eps``-dense net of the circle."""

    rho: float
    eps: float
    radius: float

    @property
    def step(self) -> float:
        return self.eps**2 / (2.0 * self.rho**2)

    @property
    def last(self) -> int:
        return math.floor(4.0 * math.pi * self.rho**2 / self.eps**2)

    @property
    def count(self) -> int:
        return self.last + 1

    def points(self, idx: np.ndarray) -> np.ndarray:
        ang = idx * self.step
        return np.stack([self.rho * np.cos(ang), self.rho * np.sin(ang), np.zeros_like(ang)], axis=-1)

    def iter_centers(self) -> Iterator[np.ndarray]:
        yield from self.points(np.arange(self.count, dtype=float))

    def nearest(self, q: np.ndarray) -> np.ndarray:
        """Distance from each row of ``q`` to the closest net point among the
        angular neighbours of the point of the circle lying in ``H(q)``."""
        s = np.hypot(q[:, 0], q[:, 1])
        theta = np.arctan2(q[:, 1], q[:, 0])
        arg = np.clip(q[:, 2] / (2.0 * self.rho * np.maximum(s, 1e-300)), -1.0, 1.0)
        phi = np.mod(theta - np.arcsin(arg), 2.0 * math.pi)
        j0 = np.floor(phi / self.step)
        best = np.full(len(q), np.inf)
        cands = [j0 + o for o in (-1, 0, 1, 2)]
        cands += [np.zeros_like(j0), np.full_like(j0, self.last)]
        for j in cands:
            j = np.clip(j, 0, self.last)
            d = _norm(_mul(-self.points(j), q))
            best = np.minimum(best, d)
        return best


@dataclass(frozen=True)
class Cover:
    target: HeisRect
    construction: Construction
    density_claim: float
    point_families: tuple = ()
    ring_families: tuple[RingFamily, ...] = field(default=())

    def __post_init__(self):
        if self.element_count == 0:
            raise DomainError("cover has no elements")

    @property
    def families(self):
        return self.point_families + self.ring_families

    @property
    def element_count(self) -> int:
        return sum(f.count for f in self.families)

    @property
    def min_radius(self) -> float:
        return min(f.radius for f in self.families)

    @property
    def max_radius(self) -> float:
        return max(f.radius for f in self.families)

    def elements(self) -> Iterator[CoverElement]:
        """Lazily enumerate the balls (may be very many for annulus covers)."""
        for f in self.families:
            for c in f.iter_centers():
                yield CoverElement(HeisPoint(*c), f.radius)

    def coverage(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per point: smallest ``dist / radius`` over candidate elements, and the
        smallest distance to a candidate centre.  A ratio ``<= 1`` certifies
        the point is covered; candidate search never reports a false cover."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        ratio = np.full(len(q), np.inf)
        gap = np.full(len(q), np.inf)
        for f in self.point_families:
            d = f.nearest(q)
            ratio = np.minimum(ratio, d / f.radius)
            gap = np.minimum(gap, d)
        if self.ring_families:
            r2 = self.target.radii.r2
            s = np.hypot(q[:, 0], q[:, 1])
            k_guess = np.rint((s / r2) ** 2)
            rings = self.ring_families
            for off in (-2, -1, 0, 1, 2):
                k = np.clip(k_guess + off, 1, len(rings)).astype(int)
                for ki in np.unique(k):
                    sel = k == ki
                    ring = rings[ki - 1]
                    d = ring.nearest(q[sel])
                    ratio[sel] = np.minimum(ratio[sel], d / ring.radius)
                    gap[sel] = np.minimum(gap[sel], d)
        return ratio, gap


def trivial_cover(r: Radii) -> Cover:
    rad = rect_diameter_bound(r)
    fam = PointFamily(np.zeros((1, 3)), rad)
    return Cover(HeisRect.at_origin(r), Construction.TRIVIAL, rad, (fam,))


def _segment_family(r1: float, r2: float) -> SegmentFamily:
    m = math.floor((r2 * r2) / (r1 * r1) * (1.0 + CEIL_GUARD))
    return SegmentFamily(r1 * r1, m, 2.0 * r1)


def segment_net(r: Radii) -> Cover:
    """Balls of radius ``2 r1`` centred at ``(0, 0, k r1^2)``, ``|k| <= floor(r2^2 / r1^2)``."""
    if r.r1 > r.r2:
        raise DomainError(f"segment net needs r1 <= r2, got r1={r.r1}, r2={r.r2}")
    return Cover(HeisRect.at_origin(r), Construction.SEGMENT_NET, 2.0 * r.r1, (_segment_family(r.r1, r.r2),))


def circle_net(rho: float, eps: float) -> np.ndarray:
    """The ``eps``-dense angular net of the horizontal circle of radius ``rho``."""
    if not (rho > 0 and eps > 0):
        raise DomainError("circle_net needs rho > 0 and eps > 0")
    ring = RingFamily(rho, eps, eps)
    return ring.points(np.arange(ring.count, dtype=float))


def ring_count(r: Radii) -> int:
    return math.ceil((r.r1 / r.r2) ** 2 * (1.0 - CEIL_GUARD))


def annulus_cover(r: Radii) -> Cover:
    if r.r1 < r.r2:
        raise DomainError(f"annulus cover needs r1 >= r2, got r1={r.r1}, r2={r.r2}")
    r2 = r.r2
    central = _segment_family(r2, r2)
    rings = []
    for k in range(1, ring_count(r) + 1):
        rho = r2 * math.sqrt(k)
        rings.append(RingFamily(rho, r2 * r2 / rho, RING_RADIUS_FACTOR * r2 * r2 / rho))
    claim = max(central.radius, max(f.radius for f in rings))
    return Cover(HeisRect.at_origin(r), Construction.ANNULUS, claim, (central,), tuple(rings))


def select_construction(r: Radii, t: float) -> Construction:
    if not (0.0 <= t <= 4.0):
        raise DomainError(f"t must lie in [0, 4], got {t}")
    if r.thin:
        return Construction.TRIVIAL if t <= 2.0 else Construction.SEGMENT_NET
    return Construction.TRIVIAL if t <= 3.0 else Construction.ANNULUS


def build_cover(r: Radii, t: float) -> Cover:
    """The cover whose content has the order of ``Phi^t(r)``; ``r1 == r2`` counts as thin."""
    kind = select_construction(r, t)
    if kind is Construction.TRIVIAL:
        return trivial_cover(r)
    if kind is Construction.SEGMENT_NET:
        return segment_net(r)
    return annulus_cover(r)


def content(c: Cover, t: float) -> float:
    """``sum (2 radius)^t`` over the elements: an upper bound for the t-content."""
    if t < 0:
        raise DomainError("t must be non-negative")
    return math.fsum(f.count * (2.0 * f.radius) ** t for f in c.families)


@dataclass(frozen=True)
class DensityReport:
    max_gap: float
    violations: int
    max_ratio: float
    n_samples: int


def verify_density(c: Cover, n_samples: int = 10_000, rng=None) -> DensityReport:
    """Sample the target uniformly and check each point lies in some element."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    q = sample_rect(c.target, as_rng(rng), n_samples)
    ratio, gap = c.coverage(q)
    return DensityReport(float(gap.max()), int(np.sum(ratio > 1.0)), float(ratio.max()), n_samples)
