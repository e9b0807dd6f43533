"""The acceptance suite: nine numerical checks with fixed tolerances and time budgets.

Each ``criterion_N(seed)`` returns a :class:`CriterionResult`.  A criterion
passes only if every sub-check holds *and* it finishes inside its budget.
Tolerances are module constants and are deliberately not parameters.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from .covers import annulus_cover, build_cover, content, segment_net, trivial_cover, verify_density
from .energy import (
    capacity_lower_bound,
    energy_bound_rect,
    riesz_energy_ball,
    riesz_energy_rect,
)
from .group import Radii, _mul, _norm, in_horizontal_plane, planar_dist
from .limsup import (
    HeisGrid,
    Window,
    block_coefficients,
    dimension_estimate,
    point_cells,
    simulate_generations,
    vertical_segment,
    window_cells,
)
from .rng import make_rng
from .svf import PowerLawSeq, _phi_formula, dimension_threshold, phi, phi_branch

RTOL_ALGEBRA = 1e-9
N_ALGEBRA = 100_000
TOL_BRANCH = 1e-12
TOL_CONTINUITY = 1e-6
TOL_THRESHOLD = 1e-6
TOL_BRUTE = 1e-3
BRUTE_N = 10**6
DENSITY_SAMPLES = 10_000
SWEEP = range(7)  # r = (2^-j, 2^-k), j, k = 0..6
SEGMENT_SLOPE, SEGMENT_TOL = 2.0, 0.05
ANNULUS_SLOPE, ANNULUS_TOL = 6.0, 0.1
COUNT_OCTAVES = range(2, 9)  # aspect ratios 2^2 .. 2^8
CONTENT_TS = (0.5, 1.5, 2.5, 3.5)
CONTENT_SLOPE_TOL = 0.05
CONTENT_MAX_RESIDUAL = math.log(50.0)
ENERGY_PAIRS = 100_000
BALL_TS = (0.5, 2.5, 3.5)
BALL_RADII = (0.25, 1.0, 4.0)
BALL_SLOPE_TOL = 0.1
# one exponent per case of the rectangle energy bound
RECT_CASES = (("thin", 0.5), ("thin", 3.5), ("flat", 1.5), ("flat", 3.5))
RECT_ASPECTS = range(3, 8)  # short side 2^-3 .. 2^-7 of the long side
RECT_SCALES = range(0, 5)  # isotropic scale 2^0 .. 2^-4 at aspect 2^-4
RECT_SLOPE_TOL = 0.1
SANDWICH_SLACK = 1.1
SANDWICH_SLOPE_TOL = 0.1
WINDOW_DELTAS = range(5, 10)  # 2^-5 .. 2^-9
WINDOW_SLOPE, WINDOW_TOL = 4.0, 0.1
SEGMENT_DELTAS = range(3, 8)
VSEG_SLOPE, VSEG_TOL = 2.0, 0.2
GENERATION_NS = (10**3, 10**4, 10**5)
GEN_SLOPE, GEN_TOL = 2.0, 0.3
GADGET_ROWS = 20
GADGET_TOL = 1e-12
GADGET_HORIZON_CONST = 1 << 21
GADGET_HORIZON_LOG = 36_400_000

BUDGETS = {1: 5.0, 2: 1.0, 3: 1.0, 4: 120.0, 5: 60.0, 6: 300.0, 7: 300.0, 8: 300.0, 9: 1.0}
TITLES = {
    1: "algebra/metric suite",
    2: "phi consistency",
    3: "threshold oracle",
    4: "cover soundness",
    5: "content tracks phi",
    6: "energy scaling",
    7: "capacity/content sandwich",
    8: "dimension estimator calibration",
    9: "block-coefficient gadget",
}


@dataclass(frozen=True)
class CriterionResult:
    id: int
    title: str
    passed: bool
    detail: str
    elapsed: float
    budget: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.id} ({self.title}): {self.detail}; {self.elapsed:.2f}s of {self.budget:g}s"


def _slope(x, y) -> tuple[float, np.ndarray]:
    fit = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    resid = np.asarray(y) - (fit.intercept + fit.slope * np.asarray(x))
    return float(fit.slope), resid


def _timed(cid: int, body: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    elapsed = time.perf_counter() - t0
    budget = BUDGETS[cid]
    if elapsed > budget:
        ok = False
        detail += " [over time budget]"
    return CriterionResult(cid, TITLES[cid], bool(ok), detail, elapsed, budget)


# 1 ------------------------------------------------------------------------

def _algebra(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed, 1)
    n, tol = N_ALGEBRA, RTOL_ALGEBRA
    p, q, r = (rng.uniform(-10, 10, (n, 3)) for _ in range(3))
    fails = {}

    def scale(*a):
        return 1.0 + sum(np.max(np.abs(x), axis=1) for x in a) ** 2

    lhs, rhs = _mul(_mul(p, q), r), _mul(p, _mul(q, r))
    fails["assoc"] = np.sum(np.max(np.abs(lhs - rhs), axis=1) > tol * scale(p, q, r))
    e = np.zeros_like(p)
    fails["identity"] = np.sum(np.any((_mul(p, e) != p) | (_mul(e, p) != p), axis=1))
    fails["inverse"] = np.sum(np.max(np.abs(_mul(p, -p)), axis=1) > tol * scale(p))

    d_pq = _norm(_mul(-p, q))
    d_qp = _norm(_mul(-q, p))
    d_qr = _norm(_mul(-q, r))
    d_pr = _norm(_mul(-p, r))
    fails["zero"] = np.sum(_norm(_mul(-p, p)) != 0.0) + np.sum(d_pq <= 0.0)
    fails["symmetry"] = np.sum(np.abs(d_pq - d_qp) > tol * d_pq)
    fails["triangle"] = np.sum(d_pr > (d_pq + d_qr) * (1.0 + tol))

    g = rng.uniform(-10, 10, (n, 3))
    d_g = _norm(_mul(-_mul(g, p), _mul(g, q)))
    fails["left-inv"] = np.sum(np.abs(d_g - d_pq) > tol * np.maximum(1.0, d_pq) * scale(g))

    planar = planar_dist(p, q)
    fails["planar<=d"] = np.sum(planar > d_pq * (1.0 + tol))
    # d^4 - planar^4 is the squared offset from H(p), so equality holds exactly on H(p)
    gap = q[:, 2] - p[:, 2] - 2.0 * (p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0])
    fails["plane-defect"] = np.sum(np.abs(d_pq**4 - planar**4 - gap**2) > tol * d_pq**4)
    fails["generic-off-plane"] = np.sum(in_horizontal_plane(p, q))
    # pairs built inside H(p) attain it
    h = np.column_stack([rng.uniform(-10, 10, (n, 2)), np.zeros(n)])
    qh = _mul(p, h)
    d_h = _norm(_mul(-p, qh))
    fails["equality-in-plane"] = np.sum(~in_horizontal_plane(p, qh)) + np.sum(
        np.abs(d_h - planar_dist(p, qh)) > tol * d_h
    )
    total = int(sum(int(v) for v in fails.values()))
    bad = [k for k, v in fails.items() if v]
    return total == 0, f"{n} cases x {len(fails)} checks, failures: {total}" + (f" in {bad}" if bad else "")


def criterion_1(seed: int = 0) -> CriterionResult:
    return _timed(1, lambda: _algebra(seed))


# 2 ------------------------------------------------------------------------

def _phi_checks(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed, 2)
    worst_branch = 0.0
    for t, c in zip(rng.uniform(0, 4, 1000), rng.uniform(0.01, 2.0, 1000)):
        ref = c**t
        for thin in (True, False):
            br = phi_branch(t, thin)
            worst_branch = max(worst_branch, abs(_phi_formula(t, c, c, br) - ref) / ref)
    worst_cont = 0.0
    worst_four = 0.0
    for _ in range(1000):
        a, b = np.sort(rng.uniform(0.01, 2.0, 2))
        for r, t0 in ((Radii(a, b), 2.0), (Radii(b, a), 3.0)):
            lo, hi = phi(t0 - 1e-9, r).value, phi(t0 + 1e-9, r).value
            worst_cont = max(worst_cont, abs(hi - lo) / phi(t0, r).value)
            four = phi(4.0, r).value
            ref = r.r1**2 * r.r2**2
            worst_four = max(worst_four, abs(four - ref) / ref)
    ok = worst_branch <= TOL_BRANCH and worst_cont <= TOL_CONTINUITY and worst_four <= TOL_BRANCH
    return ok, f"branch {worst_branch:.2e}, continuity {worst_cont:.2e}, t=4 {worst_four:.2e}"


def criterion_2(seed: int = 0) -> CriterionResult:
    return _timed(2, lambda: _phi_checks(seed))


# 3 ------------------------------------------------------------------------

def brute_exponent(t: float, s: PowerLawSeq, n: int = BRUTE_N) -> float:
    """``-log Phi^t(r_n) / log n`` from the radii themselves."""
    return -math.log(phi(t, s.radii(n)).value) / math.log(n)


def brute_threshold(s: PowerLawSeq, n: int = BRUTE_N, tol: float = 1e-9) -> float:
    if brute_exponent(4.0, s, n) <= 1.0:
        return 4.0
    lo, hi = 0.0, 4.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if brute_exponent(mid, s, n) > 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _thresholds(seed: int) -> tuple[bool, str]:
    iso = dimension_threshold(PowerLawSeq(0.5, 0.5))
    ani_seq = PowerLawSeq(0.25, 1.0)
    ani = dimension_threshold(ani_seq)
    capped = dimension_threshold(PowerLawSeq(0.125, 0.125))
    brute = brute_threshold(ani_seq)
    checks = [
        iso.value == 2.0 and iso.exact == 2,
        abs(ani.value - 22 / 7) <= TOL_THRESHOLD and ani.exact == Fraction(22, 7),
        abs(brute - 22 / 7) <= TOL_BRUTE,
        capped.value == 4.0,
    ]
    return all(checks), (
        f"(1/2,1/2) -> {iso.value!r}, (1/4,1) -> {ani.value:.9f} (exact {ani.exact}), "
        f"brute force {brute:.6f}, (1/8,1/8) -> {capped.value!r}"
    )


def criterion_3(seed: int = 0) -> CriterionResult:
    return _timed(3, lambda: _thresholds(seed))


# 4 ------------------------------------------------------------------------

def sweep_radii():
    for j in SWEEP:
        for k in SWEEP:
            yield j, k, Radii(2.0**-j, 2.0**-k)


def _covers(seed: int) -> tuple[bool, str]:
    violations, n_covers, worst = 0, 0, 0.0
    for j, k, r in sweep_radii():
        covers = [trivial_cover(r)]
        if r.r1 <= r.r2:
            covers.append(segment_net(r))
        if r.r1 >= r.r2:
            covers.append(annulus_cover(r))
        for ci, c in enumerate(covers):
            rep = verify_density(c, DENSITY_SAMPLES, make_rng(seed, 4, j, k, ci))
            violations += rep.violations
            worst = max(worst, rep.max_ratio)
            n_covers += 1
    ratios = [2.0**m for m in COUNT_OCTAVES]
    seg = [segment_net(Radii(1.0 / a, 1.0)).element_count for a in ratios]
    ann = [annulus_cover(Radii(1.0, 1.0 / a)).element_count for a in ratios]
    s_seg, _ = _slope(np.log(ratios), np.log(seg))
    s_ann, _ = _slope(np.log(ratios), np.log(ann))
    ok = violations == 0 and abs(s_seg - SEGMENT_SLOPE) <= SEGMENT_TOL and abs(s_ann - ANNULUS_SLOPE) <= ANNULUS_TOL
    return ok, (
        f"{violations} violations over {n_covers} covers (worst dist/radius {worst:.3f}); "
        f"segment count slope {s_seg:.4f}, annulus count slope {s_ann:.4f}"
    )


def criterion_4(seed: int = 0) -> CriterionResult:
    return _timed(4, lambda: _covers(seed))


# 5 ------------------------------------------------------------------------

def content_fit(t: float) -> tuple[float, float]:
    """Slope and largest absolute residual of log content vs log Phi^t over the sweep."""
    lp, lc = [], []
    for _, _, r in sweep_radii():
        lp.append(math.log(phi(t, r).value))
        lc.append(math.log(content(build_cover(r, t), t)))
    slope, resid = _slope(lp, lc)
    return slope, float(np.max(np.abs(resid)))


def _content(seed: int) -> tuple[bool, str]:
    ok, parts = True, []
    for t in CONTENT_TS:
        slope, res = content_fit(t)
        good = abs(slope - 1.0) <= CONTENT_SLOPE_TOL and res <= CONTENT_MAX_RESIDUAL
        ok &= good
        parts.append(f"t={t}: slope {slope:.4f}, max residual {res:.3f}" + ("" if good else " (out of tolerance)"))
    return ok, "; ".join(parts)


def criterion_5(seed: int = 0) -> CriterionResult:
    return _timed(5, lambda: _content(seed))


# 6 ------------------------------------------------------------------------

def _case_radii(kind: str, long: float, short: float) -> Radii:
    return Radii(short, long) if kind == "thin" else Radii(long, short)


def _energy(seed: int) -> tuple[bool, str]:
    ok, parts = True, []
    for ti, t in enumerate(BALL_TS):
        vals = [riesz_energy_ball(rho, t, ENERGY_PAIRS, seed, (6, 0, ti, i)).value for i, rho in enumerate(BALL_RADII)]
        slope, _ = _slope(np.log(BALL_RADII), np.log(vals))
        good = abs(slope - (8.0 - t)) <= BALL_SLOPE_TOL
        ok &= good
        parts.append(f"ball t={t}: {slope:.3f} vs {8 - t}")
    for ci, (kind, t) in enumerate(RECT_CASES):
        xs, ys = [], []
        for i in RECT_ASPECTS:
            r = _case_radii(kind, 1.0, 2.0**-i)
            e = riesz_energy_rect(r, t, ENERGY_PAIRS, seed, (6, 1, ci, i))
            xs.append(-i * math.log(2.0))
            ys.append(math.log(e.value / energy_bound_rect(t, r).bound))
        s_shape, _ = _slope(xs, ys)
        xs, ys = [], []
        for i in RECT_SCALES:
            r = _case_radii(kind, 1.0, 2.0**-4).scaled(2.0**-i)
            e = riesz_energy_rect(r, t, ENERGY_PAIRS, seed, (6, 2, ci, i))
            xs.append(-i * math.log(2.0))
            ys.append(math.log(e.value / energy_bound_rect(t, r).bound))
        s_scale, _ = _slope(xs, ys)
        tag = energy_bound_rect(t, _case_radii(kind, 1.0, 0.5)).case_tag.value
        good = abs(s_shape) <= RECT_SLOPE_TOL and abs(s_scale) <= RECT_SLOPE_TOL
        ok &= good
        parts.append(f"{tag} t={t}: shape {s_shape:+.3f}, scale {s_scale:+.3f}")
    return ok, "; ".join(parts)


def criterion_6(seed: int = 0) -> CriterionResult:
    return _timed(6, lambda: _energy(seed))


# 7 ------------------------------------------------------------------------

def _sandwich(seed: int) -> tuple[bool, str]:
    ok, parts = True, []
    for ti, t in enumerate(CONTENT_TS):
        lp, lcap, lcont, worst = [], [], [], 0.0
        for j, k, r in sweep_radii():
            e = riesz_energy_rect(r, t, ENERGY_PAIRS, seed, (7, ti, j, k))
            cap = capacity_lower_bound(r, t, e)
            cont = content(build_cover(r, t), t)
            p = phi(t, r).value
            worst = max(worst, cap / cont)
            lp.append(math.log(p))
            lcap.append(math.log(cap / p))
            lcont.append(math.log(cont / p))
        s_cap, _ = _slope(lp, lcap)
        s_cont, _ = _slope(lp, lcont)
        good = worst <= SANDWICH_SLACK and abs(s_cap) <= SANDWICH_SLOPE_TOL and abs(s_cont) <= SANDWICH_SLOPE_TOL
        ok &= good
        parts.append(f"t={t}: max cap/content {worst:.3g}, slopes cap {s_cap:+.3f} content {s_cont:+.3f}")
    return ok, "; ".join(parts)


def criterion_7(seed: int = 0) -> CriterionResult:
    return _timed(7, lambda: _sandwich(seed))


# 8 ------------------------------------------------------------------------

def _calibration(seed: int) -> tuple[bool, str]:
    w = Window.unit()
    amb = dimension_estimate([(2.0**-i, window_cells(w, HeisGrid(2.0**-i))) for i in WINDOW_DELTAS]).slope
    vs = dimension_estimate(
        [(2.0**-i, point_cells(vertical_segment(1.0, 2.0**-i), HeisGrid(2.0**-i))) for i in SEGMENT_DELTAS]
    ).slope
    seq = PowerLawSeq(0.5, 0.5)
    gens = simulate_generations(seq, GENERATION_NS, w, seed)
    gen = dimension_estimate([(g.delta, g.occupied) for g in gens]).slope
    thr = dimension_threshold(seq).value
    ok = (
        abs(amb - WINDOW_SLOPE) <= WINDOW_TOL
        and abs(vs - VSEG_SLOPE) <= VSEG_TOL
        and abs(gen - GEN_SLOPE) <= GEN_TOL
        and thr == GEN_SLOPE
    )
    return ok, f"ambient {amb:.3f}, vertical segment {vs:.3f}, isotropic generations {gen:.3f} (threshold {thr:g})"


def criterion_8(seed: int = 0) -> CriterionResult:
    return _timed(8, lambda: _calibration(seed))


# 9 ------------------------------------------------------------------------

def log_weights(horizon: int) -> np.ndarray:
    """``b_k = 1 + log k`` for ``k = 1 .. horizon``, built in place."""
    b = np.arange(1, horizon + 1, dtype=float)
    np.log(b, out=b)
    b += 1.0
    return b


def _gadget(seed: int) -> tuple[bool, str]:
    ok, parts = True, []
    for name, b, horizon in (
        ("b=1", np.ones(GADGET_HORIZON_CONST), GADGET_HORIZON_CONST),
        ("b=1+log k", log_weights(GADGET_HORIZON_LOG), GADGET_HORIZON_LOG),
    ):
        table = block_coefficients(b, horizon, GADGET_ROWS)
        st = table.all_row_stats()
        row_err = max(abs(s - 1.0) for s, _ in st)
        w = np.array([v for _, v in st])
        dec = bool(np.all(np.diff(w) < 0))
        dominated = all(w[n - 1] <= 2.0**-n for n in range(1, GADGET_ROWS + 1))
        good = row_err <= GADGET_TOL and dec and dominated
        ok &= good
        parts.append(f"{name}: row-sum error {row_err:.1e}, sum a^2 b decreasing={dec}, <= 2^-n={dominated}")
        del b, table
    return ok, "; ".join(parts)


def criterion_9(seed: int = 0) -> CriterionResult:
    return _timed(9, lambda: _gadget(seed))


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_all(seed: int = 0, only=None, report: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for cid, fn in CRITERIA.items():
        if only and cid not in only:
            continue
        res = fn(seed)
        if report is not None:
            report(res.line())
        out.append(res)
    return out
