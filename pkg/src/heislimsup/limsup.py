"""Random rectangle placement, box counting on a graded grid, and the
block-coefficient gadget used for almost-sure weak-* convergence arguments.

The grid partitions the group into left translates of a small box: the
planar plane is cut into ``delta``-squares with centres ``c``, and within the
column over a square a point ``p`` gets vertical index
``floor(z(c^-1 p) / delta^2)``.  Because left translation is an isometry,
every cell has gauge diameter at most ``13^(1/4) delta`` wherever it sits,
which a Euclidean ``delta x delta x delta^2`` grid does not achieve away from
the ``z`` axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .group import DomainError, _mul
from .rng import as_rng
from .svf import PowerLawSeq


@dataclass(frozen=True)
class Window:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3 or not all(a < b for a, b in zip(lo, hi)):
            raise DomainError(f"window needs lo < hi in every coordinate, got {lo}, {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls) -> "Window":
        return cls((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lo) + np.array(self.hi))

    def contains(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.all((p >= np.array(self.lo)) & (p <= np.array(self.hi)), axis=-1)


@dataclass(frozen=True)
class HeisGrid:
    delta: float
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"grid step must be positive, got {self.delta}")

    def indices(self, p: np.ndarray) -> np.ndarray:
        """Integer cell indices ``(i, j, k)`` of each row of ``p``."""
        p = np.asarray(p, dtype=float)
        d = self.delta
        ox, oy, oz = self.offset
        i = np.floor((p[:, 0] - ox) / d)
        j = np.floor((p[:, 1] - oy) / d)
        cx = (i + 0.5) * d + ox
        cy = (j + 0.5) * d + oy
        zc = p[:, 2] - 2.0 * (cx * p[:, 1] - cy * p[:, 0])
        k = np.floor((zc - oz) / (d * d))
        return np.stack([i, j, k], axis=-1).astype(np.int64)

    def cell_point(self, idx: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Point of cell ``idx`` with local coordinates ``u`` in ``[0, 1)^3``."""
        d = self.delta
        ox, oy, oz = self.offset
        idx = np.asarray(idx, dtype=float)
        c = np.stack([(idx[:, 0] + 0.5) * d + ox, (idx[:, 1] + 0.5) * d + oy, np.zeros(len(idx))], axis=-1)
        local = np.stack([(u[:, 0] - 0.5) * d, (u[:, 1] - 0.5) * d, (idx[:, 2] + u[:, 2]) * d * d + oz], axis=-1)
        return _mul(c, local)


def _unique_rows(blocks: list[np.ndarray]) -> int:
    if not blocks:
        return 0
    rows = np.unique(np.concatenate(blocks), axis=0)
    return len(rows)


def sample_centers(window: Window, n: int, rng=None) -> np.ndarray:
    """``n`` i.i.d. points uniform (Lebesgue = Haar) on the window, shape ``(n, 3)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_rng(rng)
    lo, hi = np.array(window.lo), np.array(window.hi)
    return lo + (hi - lo) * rng.random((n, 3))


def _probe_lattice(r1_max: float, r2_max: float, delta: float) -> np.ndarray:
    """Unit-rectangle probe points: a lattice on ``[-1,1]^2`` clipped to the disk
    times ``[-1, 1]``, fine enough that scaled probes are ``<= delta/2`` apart
    horizontally and ``<= delta^2/2`` vertically, and at least 3 per axis."""
    n1 = max(3, math.ceil(4.0 * r1_max / delta) + 1)
    n3 = max(3, math.ceil(4.0 * r2_max**2 / delta**2) + 1)
    u = np.linspace(-1.0, 1.0, n1)
    ux, uy = np.meshgrid(u, u, indexing="ij")
    keep = ux**2 + uy**2 <= 1.0 + 1e-12
    planar = np.stack([ux[keep], uy[keep]], axis=-1)
    w = np.linspace(-1.0, 1.0, n3)
    return np.column_stack([np.repeat(planar, n3, axis=0), np.tile(w, len(planar))])


def rectangle_cells(centers: np.ndarray, r1: np.ndarray, r2: np.ndarray, grid: HeisGrid,
                    window: Window | None = None, batch: int = 4096) -> list[np.ndarray]:
    """Cell-index blocks hit by the probe lattices of rectangles ``R(centers[i], (r1[i], r2[i]))``.

    Probes outside ``window`` are discarded (rectangles are clipped to it).
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    r1 = np.broadcast_to(np.asarray(r1, dtype=float), (len(centers),))
    r2 = np.broadcast_to(np.asarray(r2, dtype=float), (len(centers),))
    out = []
    for s in range(0, len(centers), batch):
        c, a, b = centers[s:s + batch], r1[s:s + batch], r2[s:s + batch]
        lattice = _probe_lattice(float(a.max()), float(b.max()), grid.delta)
        local = np.stack(
            [a[:, None] * lattice[None, :, 0], a[:, None] * lattice[None, :, 1], (b * b)[:, None] * lattice[None, :, 2]],
            axis=-1,
        )
        pts = _mul(c[:, None, :], local).reshape(-1, 3)
        if window is not None:
            pts = pts[window.contains(pts)]
        if len(pts):
            out.append(np.unique(grid.indices(pts), axis=0))
    return out


def occupied_cells(centers: np.ndarray, radii_seq: PowerLawSeq, n_range: tuple[int, int],
                   grid: HeisGrid, window: Window | None = None) -> int:
    """Number of grid cells meeting ``R(p_n, r_n)`` for some ``n_lo <= n <= n_hi``.

    ``centers[n - 1]`` is ``p_n``; indices are 1-based like the sequence.
    """
    n_lo, n_hi = n_range
    if not (1 <= n_lo <= n_hi <= len(centers)):
        raise DomainError(f"need 1 <= n_lo <= n_hi <= {len(centers)}, got {n_range}")
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    blocks = rectangle_cells(centers[n_lo - 1:n_hi], n ** -radii_seq.alpha, n ** -radii_seq.beta, grid, window)
    return _unique_rows(blocks)


def window_cells(window: Window, grid: HeisGrid) -> int:
    """Exact number of grid cells meeting the window.

    Over each planar square the window is a sheared prism whose range of the
    cell-frame vertical coordinate is an interval with extremes at corners.
    """
    d = grid.delta
    ox, oy, oz = grid.offset
    (a1, a2, a3), (b1, b2, b3) = window.lo, window.hi
    i = np.arange(math.floor((a1 - ox) / d), math.floor((b1 - ox) / d) + 1)
    j = np.arange(math.floor((a2 - oy) / d), math.floor((b2 - oy) / d) + 1)
    ii, jj = np.meshgrid(i, j, indexing="ij")
    x_lo = np.maximum(ii * d + ox, a1)
    x_hi = np.minimum((ii + 1) * d + ox, b1)
    y_lo = np.maximum(jj * d + oy, a2)
    y_hi = np.minimum((jj + 1) * d + oy, b2)
    cx = (ii + 0.5) * d + ox
    cy = (jj + 0.5) * d + oy
    # shear term -2 (cx y - cy x) is linear; extremes over the corner set
    shears = [-2.0 * (cx * y - cy * x) for x in (x_lo, x_hi) for y in (y_lo, y_hi)]
    s_min = np.minimum.reduce(shears)
    s_max = np.maximum.reduce(shears)
    k_lo = np.floor((a3 + s_min - oz) / (d * d))
    k_hi = np.floor((b3 + s_max - oz) / (d * d))
    valid = (x_lo <= x_hi) & (y_lo <= y_hi)
    return int(np.sum((k_hi - k_lo + 1)[valid]))


def point_cells(points: np.ndarray, grid: HeisGrid) -> int:
    return len(np.unique(grid.indices(np.asarray(points, dtype=float)), axis=0))


def vertical_segment(length: float, delta: float) -> np.ndarray:
    """Points of ``{0} x [0, length]`` spaced ``delta^2 / 4`` apart."""
    z = np.arange(0.0, length, delta * delta / 4.0)
    return np.column_stack([np.zeros_like(z), np.zeros_like(z), z])


def horizontal_disk_cells(radius: float, grid: HeisGrid) -> int:
    """Number of cells meeting the disk ``{x^2 + y^2 <= radius^2, z = 0}``.

    Columns are kept when a corner of their square lies in the disk, and the
    cell-frame height ``-2 (c_x y - c_y x)`` is ranged over those corners.
    Columns clipped only along an edge are missed, which loses a boundary shell
    of ``O(1/delta)`` columns and does not change the scaling.
    """
    d = grid.delta
    ox, oy, oz = grid.offset
    i = np.arange(math.floor((-radius - ox) / d), math.floor((radius - ox) / d) + 1)
    j = np.arange(math.floor((-radius - oy) / d), math.floor((radius - oy) / d) + 1)
    ii, jj = np.meshgrid(i, j, indexing="ij")
    cx = (ii + 0.5) * d + ox
    cy = (jj + 0.5) * d + oy
    lo = np.full(ii.shape, np.inf)
    hi = np.full(ii.shape, -np.inf)
    for x in (ii * d + ox, (ii + 1) * d + ox):
        for y in (jj * d + oy, (jj + 1) * d + oy):
            inside = x * x + y * y <= radius * radius
            h = -2.0 * (cx * y - cy * x)
            lo = np.where(inside, np.minimum(lo, h), lo)
            hi = np.where(inside, np.maximum(hi, h), hi)
    ok = np.isfinite(lo)
    k_lo = np.floor((lo[ok] - oz) / (d * d))
    k_hi = np.floor((hi[ok] - oz) / (d * d))
    return int(np.sum(k_hi - k_lo + 1))


@dataclass(frozen=True)
class DimensionFit:
    slope: float
    intercept: float
    r2_fit: float
    stderr: float


def dimension_estimate(counts: Sequence[tuple[float, float]]) -> DimensionFit:
    """OLS slope of ``log N(delta)`` against ``log(1/delta)``."""
    counts = [(float(d), float(n)) for d, n in counts]
    if len(counts) < 3:
        raise DomainError("need at least 3 scales")
    deltas = np.array([d for d, _ in counts])
    ns = np.array([n for _, n in counts])
    if np.any(deltas <= 0) or np.any(ns <= 0):
        raise DomainError("scales and counts must be positive")
    if deltas.max() / deltas.min() < 4.0 - 1e-12:
        raise DomainError("scales must span at least two octaves")
    fit = stats.linregress(np.log(1.0 / deltas), np.log(ns))
    return DimensionFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2), float(fit.stderr))


@dataclass(frozen=True)
class GenerationCount:
    n: int
    delta: float
    occupied: int

    @property
    def log_inv_delta(self) -> float:
        return math.log(1.0 / self.delta)

    @property
    def log_occupied(self) -> float:
        return math.log(self.occupied)


def simulate_generations(seq: PowerLawSeq, ns: Sequence[int], window: Window, seed: int = 0,
                         delta_factor: float = 1.0) -> list[GenerationCount]:
    """Box-count the generation ``R(p_n, r_n), n in [N, 2N]`` for each ``N``.

    Centres ``p_1 .. p_2N`` are drawn from stream ``(seed, N)``; the grid step
    is ``delta_factor * max(r1, r2)`` at ``n = N``, i.e. matched to the
    generation's rectangle size.
    """
    from .rng import make_rng

    out = []
    for N in ns:
        centers = sample_centers(window, 2 * N, make_rng(seed, int(N)))
        r = seq.radii(N)
        delta = delta_factor * max(r.r1, r.r2)
        occ = occupied_cells(centers, seq, (N, 2 * N), HeisGrid(delta), window)
        out.append(GenerationCount(int(N), delta, occ))
    return out


GADGET_CHUNK = 1 << 16


@dataclass(frozen=True)
class BlockTable:
    """Coefficients ``a[n][k] = a_n / b_k`` on ``starts[n] <= k <= ends[n]`` (1-based ``k``)."""

    starts: np.ndarray
    ends: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def n_blocks(self) -> int:
        return len(self.a)

    def row(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(k, a[n][k])`` over the support of row ``n`` (1-based)."""
        m, e = int(self.starts[n - 1]), int(self.ends[n - 1])
        k = np.arange(m, e + 1)
        return k, self.a[n - 1] / self.b[m - 1:e]

    def row_sum(self, n: int) -> float:
        return self.row_stats(n)[0]

    def weighted_square_sum(self, n: int) -> float:
        """``sum_k a[n][k]^2 b_k``."""
        return self.row_stats(n)[1]

    def row_stats(self, n: int) -> tuple[float, float]:
        """``(sum_k a[n][k], sum_k a[n][k]^2 b_k)`` from the entries of row ``n``."""
        m, e = int(self.starts[n - 1]), int(self.ends[n - 1])
        an = self.a[n - 1]
        buf = np.empty(min(e - m + 1, GADGET_CHUNK))
        total = square = 0.0
        for lo in range(m - 1, e, len(buf)):
            bk = self.b[lo:min(e, lo + len(buf))]
            v = np.divide(an, bk, out=buf[:len(bk)])
            total += float(np.sum(v))
            v *= v
            square += float(np.dot(v, bk))
        return total, square

    def all_row_stats(self) -> list[tuple[float, float]]:
        return [self.row_stats(n) for n in range(1, self.n_blocks + 1)]


def block_coefficients(b: Sequence[float] | np.ndarray | Callable[[np.ndarray], np.ndarray],
                       horizon: int, n_blocks: int | None = None) -> BlockTable:
    """Build rows ``a[n][k] = a_n / b_k`` on consecutive blocks ``[M_n, N_n]``.

    ``M_1 = 1``, ``M_{n+1} = N_n + 1`` and ``N_n`` is the least index with
    ``sum_{k=M_n}^{N_n} 1/b_k >= 2^n``, so ``a_n = 1 / sum <= 2^-n``.  Every
    row sums to one, ``sum_k a[n][k]^2 b_k = a_n``, and the supports march off
    to infinity.  ``b`` is a sequence (``b[0]`` is ``b_1``) or a vectorised
    callable of ``k``; only ``b_1 .. b_horizon`` are used.
    """
    if horizon < 1:
        raise DomainError("horizon must be positive")
    if callable(b):
        bk = np.asarray(b(np.arange(1, horizon + 1, dtype=float)), dtype=float)
    else:
        bk = np.asarray(b, dtype=float)[:horizon]
        if len(bk) < horizon:
            raise DomainError(f"b has {len(bk)} terms, fewer than horizon {horizon}")
    # min/max propagate NaN, so this also rejects non-finite entries
    if not (bk.min() > 0 and np.isfinite(bk.max())):
        raise DomainError("b must be positive and bounded away from 0")
    # One streaming pass over cache-sized chunks.  ``acc`` is the exact
    # (pairwise, per chunk) sum of 1/b_k over [m, pos); the chunk's running
    # sum only locates the block end.
    inv = np.empty(min(horizon, GADGET_CHUNK))
    run = np.empty_like(inv)
    starts, ends, a = [], [], []
    m = pos = n = 1
    acc = 0.0
    while n_blocks is None or n <= n_blocks:
        need = 2.0**n
        e = None
        while pos <= horizon:
            hi = min(horizon, pos + len(inv) - 1)
            v = np.reciprocal(bk[pos - 1:hi], out=inv[:hi - pos + 1])
            cs = np.cumsum(v, out=run[:len(v)])
            if acc + cs[-1] >= need:
                i = min(int(np.searchsorted(cs, need - acc, side="left")), len(v) - 1)
                acc += float(np.sum(v[:i + 1]))
                e = pos + i
                # the running sum may round differently from the block sum
                while acc < need and e < horizon:
                    e += 1
                    acc += 1.0 / bk[e - 1]
                break
            acc += float(np.sum(v))
            pos = hi + 1
        if e is None or acc < need:
            if n_blocks is None:
                break
            raise DomainError(
                f"horizon {horizon} too small for block {n}: partial sum of 1/b_k falls short by {need - acc:.6g}"
            )
        starts.append(m)
        ends.append(e)
        a.append(1.0 / acc)
        m = pos = e + 1
        acc = 0.0
        n += 1
    if not a:
        raise DomainError(f"horizon {horizon} too small for a single block (needs sum 1/b_k >= 2)")
    return BlockTable(np.array(starts), np.array(ends), np.array(a), bk)
