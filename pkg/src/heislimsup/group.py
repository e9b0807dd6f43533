"""Arithmetic and metric geometry of the first Heisenberg group.

Points are ``(x, y, z)`` with product

    (x, y, z)(x', y', z') = (x + x', y + y', z + z' + 2(x y' - y x'))

and gauge norm ``((x^2 + y^2)^2 + z^2)^(1/4)``.  The metric ``d(p, q) = |p^-1 q|``
is left invariant and homogeneous under the dilations ``(x, y, z) -> (sx, sy, s^2 z)``.

All functions accept either :class:`HeisPoint` instances or float arrays whose
last axis has length 3; arrays broadcast and are returned as arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .rng import as_rng

PLANE_RTOL = 1e-9

# Lebesgue measure of the unit gauge ball: 4 pi int_0^1 r sqrt(1 - r^4) dr.
UNIT_BALL_VOLUME = math.pi**2 / 2


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class HeisPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"coordinate {name}={v} is not finite")
            object.__setattr__(self, name, v)

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.z], dtype=dtype or float)

    @classmethod
    def origin(cls) -> "HeisPoint":
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Radii:
    """Rectangle radii: ``r1`` horizontal, ``r2**2`` the vertical half extent."""

    r1: float
    r2: float

    def __post_init__(self):
        for name in ("r1", "r2"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"radius {name}={v} must be positive and finite")
            object.__setattr__(self, name, v)

    @property
    def thin(self) -> bool:
        return self.r1 <= self.r2

    def scaled(self, s: float) -> "Radii":
        return Radii(s * self.r1, s * self.r2)


@dataclass(frozen=True)
class HeisRect:
    """Closed rectangle ``center * R(0, radii)``."""

    center: HeisPoint
    radii: Radii

    @classmethod
    def at_origin(cls, radii: Radii) -> "HeisRect":
        return cls(HeisPoint.origin(), radii)


PointLike = Union[HeisPoint, np.ndarray, tuple, list]


def _coords(p: PointLike) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.shape[-1:] != (3,):
        raise DomainError(f"expected trailing axis of length 3, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("non-finite coordinate")
    return a


def _wrap(result: np.ndarray, *inputs: PointLike):
    if all(isinstance(p, HeisPoint) for p in inputs):
        return HeisPoint(*result)
    return result


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    x, y, z = a[..., 0], a[..., 1], a[..., 2]
    u, v, w = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([x + u, y + v, z + w + 2.0 * (x * v - y * u)], axis=-1)


def _norm(a: np.ndarray) -> np.ndarray:
    # Rescale by s = max(|(x, y)|, |z|^(1/2)) so the quartic never under- or
    # overflows; the rescaled gauge lies in [1, 2^(1/4)].
    h = np.hypot(a[..., 0], a[..., 1])
    z = np.abs(a[..., 2])
    s = np.maximum(h, np.sqrt(z))
    with np.errstate(invalid="ignore", divide="ignore"):
        hs = h / s
        zs = z / s / s
        out = s * np.sqrt(np.sqrt(hs**4 + zs * zs))
    return np.where(s > 0, out, 0.0)


def mul(p: PointLike, q: PointLike):
    """Group product ``p q``."""
    return _wrap(_mul(_coords(p), _coords(q)), p, q)


def inv(p: PointLike):
    return _wrap(-_coords(p), p)


def gauge_norm(p: PointLike):
    n = _norm(_coords(p))
    return float(n) if np.ndim(n) == 0 else n


def dist(p: PointLike, q: PointLike):
    """Left-invariant gauge distance ``|p^-1 q|``."""
    n = _norm(_mul(-_coords(p), _coords(q)))
    return float(n) if np.ndim(n) == 0 else n


def planar_dist(p: PointLike, q: PointLike):
    a, b = _coords(p), _coords(q)
    d = np.hypot(b[..., 0] - a[..., 0], b[..., 1] - a[..., 1])
    return float(d) if np.ndim(d) == 0 else d


def dilate(p: PointLike, s: float):
    """Homogeneous dilation ``(x, y, z) -> (s x, s y, s^2 z)``; scales ``dist`` by ``s``."""
    a = _coords(p)
    out = np.stack([s * a[..., 0], s * a[..., 1], s * s * a[..., 2]], axis=-1)
    return _wrap(out, p)


def in_horizontal_plane(p: PointLike, q: PointLike, rtol: float = PLANE_RTOL):
    """Whether ``q`` lies in the horizontal plane ``H(p)`` (equivalently ``p`` in ``H(q)``)."""
    a, b = _coords(p), _coords(q)
    gap = b[..., 2] - a[..., 2] - 2.0 * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
    ok = np.abs(gap) <= rtol * (1.0 + np.abs(a[..., 2]) + np.abs(b[..., 2]))
    return bool(ok) if np.ndim(ok) == 0 else ok


def rect_contains(rect: HeisRect, q: PointLike):
    local = _mul(-_coords(rect.center), _coords(q))
    r1, r2 = rect.radii.r1, rect.radii.r2
    ok = (local[..., 0] ** 2 + local[..., 1] ** 2 <= r1 * r1) & (np.abs(local[..., 2]) <= r2 * r2)
    return bool(ok) if np.ndim(ok) == 0 else ok


def rect_volume(r: Radii) -> float:
    """Lebesgue measure ``2 pi r1^2 r2^2`` of any rectangle with radii ``r``."""
    return 2.0 * math.pi * r.r1**2 * r.r2**2


def rect_diameter_bound(r: Radii) -> float:
    # |p| <= (r1^4 + r2^4)^(1/4) <= 2^(1/4) max(r1, r2) on R(0, r); double it.
    return 2.0**1.25 * max(r.r1, r.r2)


def ball_volume(rho: float) -> float:
    return UNIT_BALL_VOLUME * rho**4


def _sample_rect_local(r1: float, r2: float, rng: np.random.Generator, n: int) -> np.ndarray:
    rad = r1 * np.sqrt(rng.random(n))
    ang = 2.0 * math.pi * rng.random(n)
    z = r2 * r2 * (2.0 * rng.random(n) - 1.0)
    return np.stack([rad * np.cos(ang), rad * np.sin(ang), z], axis=-1)


def sample_rect(rect: HeisRect, rng=None, n: int | None = None):
    """Uniform (Lebesgue) samples from ``rect``.

    Samples are drawn in ``R(0, r)`` and left-translated by the centre, which
    preserves Lebesgue measure.  Returns a :class:`HeisPoint` when ``n`` is
    None, otherwise an ``(n, 3)`` array.
    """
    rng = as_rng(rng)
    k = 1 if n is None else int(n)
    pts = _mul(_coords(rect.center), _sample_rect_local(rect.radii.r1, rect.radii.r2, rng, k))
    return HeisPoint(*pts[0]) if n is None else pts


def sample_ball(center: PointLike, rho: float, rng=None, n: int | None = None, return_rate: bool = False):
    """Uniform samples from the closed metric ball ``B(center, rho)``.

    Rejection from the enclosing rectangle ``R(center, (rho, rho))``; the
    acceptance probability is ``pi / 4`` for every radius.  With
    ``return_rate=True`` the empirical acceptance rate is returned as well.
    """
    if not (math.isfinite(rho) and rho > 0):
        raise DomainError(f"ball radius must be positive, got {rho}")
    rng = as_rng(rng)
    c = _coords(center)
    k = 1 if n is None else int(n)
    chunks, got, drawn = [], 0, 0
    while got < k:
        m = max(64, int(1.4 * (k - got)) + 16)
        cand = _sample_rect_local(rho, rho, rng, m)
        keep = cand[_norm(cand) <= rho]
        drawn += m
        chunks.append(keep)
        got += len(keep)
    local = np.concatenate(chunks)[:k]
    pts = _mul(c, local)
    out = HeisPoint(*pts[0]) if n is None else pts
    if return_rate:
        return out, got / drawn
    return out


def estimate_ball_volume(rho: float, n: int = 100_000, rng=None) -> tuple[float, float]:
    """Hit-or-miss estimate of ``lambda(B(0, rho))`` and its standard error."""
    rng = as_rng(rng)
    pts = _sample_rect_local(rho, rho, rng, n)
    p = float(np.mean(_norm(pts) <= rho))
    box = 2.0 * math.pi * rho**4
    return box * p, box * math.sqrt(p * (1.0 - p) / n)
