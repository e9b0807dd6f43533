import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heislimsup.covers import (
    Construction,
    RingFamily,
    annulus_cover,
    build_cover,
    circle_net,
    content,
    ring_count,
    segment_net,
    select_construction,
    trivial_cover,
    verify_density,
)
from heislimsup.group import DomainError, HeisRect, Radii, dist, sample_rect
from heislimsup.rng import make_rng


def brute_min_dist(cover, q):
    centers = np.array([list(e.center) for e in cover.elements()])
    radii = np.array([e.radius for e in cover.elements()])
    d = dist(q[:, None, :], centers[None, :, :])
    return d.min(axis=1), (d / radii[None, :]).min(axis=1)


def test_trivial_cover():
    c = trivial_cover(Radii(1, 1))
    assert c.element_count == 1
    assert c.max_radius == c.density_claim == 2**1.25
    assert content(c, 0) == 1
    assert content(c, 2.5) == pytest.approx((2 * 2**1.25) ** 2.5)
    # scaling like max(r1, r2)^t
    assert content(trivial_cover(Radii(0.2, 0.5)), 3) / content(trivial_cover(Radii(0.4, 1.0)), 3) == pytest.approx(1 / 8)
    assert verify_density(c, 2000, make_rng(0)).violations == 0


def test_segment_net_examples():
    c = segment_net(Radii(1, 1))
    centers = sorted(e.center.z for e in c.elements())
    assert centers == [-1.0, 0.0, 1.0]
    assert {e.radius for e in c.elements()} == {2.0}
    c = segment_net(Radii(0.1, 1))
    assert c.element_count == 201
    assert content(c, 3) == pytest.approx(12.864, rel=1e-12)
    assert verify_density(c, 10_000, make_rng(1)).violations == 0
    with pytest.raises(DomainError):
        segment_net(Radii(1, 0.5))


def test_circle_net():
    rho, eps = 1.3, 0.4
    pts = circle_net(rho, eps)
    assert len(pts) == math.floor(4 * math.pi * rho**2 / eps**2) + 1
    assert np.allclose(np.hypot(pts[:, 0], pts[:, 1]), rho) and np.all(pts[:, 2] == 0)
    assert dist(pts[:-1], pts[1:]).max() <= eps * (1 + 1e-12)
    # a huge eps still gives one point
    assert len(circle_net(1.0, 10.0)) == 1
    with pytest.raises(DomainError):
        circle_net(0, 1)


def test_ring_counts_scale_like_fourth_power():
    r2 = 0.01
    counts = [RingFamily(rho, r2 * r2 / rho, 1).count for rho in (0.1, 0.2, 0.4, 0.8)]
    slopes = np.diff(np.log(counts)) / math.log(2)
    assert np.allclose(slopes, 4, atol=0.01)


def test_annulus_examples():
    c = annulus_cover(Radii(1, 1))
    assert len(c.ring_families) == 1 and c.point_families[0].count == 3
    c = annulus_cover(Radii(1, 0.1))
    assert len(c.ring_families) == ring_count(Radii(1, 0.1)) == 100
    rep = verify_density(c, 10_000, make_rng(2))
    assert rep.violations == 0
    with pytest.raises(DomainError):
        annulus_cover(Radii(0.5, 1))


def test_ring_count_guard():
    # (r1/r2)^2 = 4 up to rounding must not produce a fifth ring
    assert ring_count(Radii(2.0000000000000004, 1.0)) == 4
    assert ring_count(Radii(2.01, 1.0)) == 5


def test_build_cover_selection():
    assert select_construction(Radii(0.1, 1), 3) is Construction.SEGMENT_NET
    assert select_construction(Radii(1, 0.1), 1) is Construction.TRIVIAL
    assert select_construction(Radii(1, 0.1), 3.5) is Construction.ANNULUS
    assert select_construction(Radii(0.1, 1), 2) is Construction.TRIVIAL
    assert select_construction(Radii(1, 0.1), 3) is Construction.TRIVIAL
    # ties count as thin
    assert select_construction(Radii(1, 1), 3.5) is Construction.SEGMENT_NET
    with pytest.raises(DomainError):
        build_cover(Radii(1, 1), 4.5)


def test_lazy_elements_match_count():
    for r in (Radii(1, 0.5), Radii(0.3, 1), Radii(2, 0.4)):
        c = annulus_cover(r) if not r.thin else segment_net(r)
        assert sum(1 for _ in c.elements()) == c.element_count
        assert content(c, 3.5) == pytest.approx(math.fsum((2 * e.radius) ** 3.5 for e in c.elements()), rel=1e-12)


@pytest.mark.parametrize("r", [Radii(1, 0.5), Radii(1, 0.3), Radii(0.7, 0.7), Radii(0.2, 1)])
def test_candidate_search_matches_brute_force(r):
    c = annulus_cover(r) if r.r1 >= r.r2 else segment_net(r)
    q = sample_rect(HeisRect.at_origin(r), make_rng(7), 3000)
    ratio, gap = c.coverage(q)
    bgap, bratio = brute_min_dist(c, q)
    # the search visits a subset of the centres, so it can only be pessimistic
    assert np.all(ratio >= bratio - 1e-12)
    assert np.all(bratio <= 1.0)
    # and the nearest centre is always among the candidates
    np.testing.assert_allclose(gap, bgap, rtol=1e-12)


def test_density_on_small_sweep():
    for j in range(4):
        for k in range(4):
            r = Radii(2.0**-j, 2.0**-k)
            for c in [trivial_cover(r)] + ([segment_net(r)] if r.thin else []) + (
                [annulus_cover(r)] if r.r1 >= r.r2 else []
            ):
                rep = verify_density(c, 2000, make_rng(3, j, k))
                assert rep.violations == 0, (r, c.construction)
                assert rep.max_ratio <= 1.0


def test_count_slopes():
    ratios = 2.0 ** np.arange(2, 9)
    seg = [segment_net(Radii(1 / a, 1)).element_count for a in ratios]
    ann = [annulus_cover(Radii(1, 1 / a)).element_count for a in ratios]
    assert np.polyfit(np.log(ratios), np.log(seg), 1)[0] == pytest.approx(2, abs=0.05)
    assert np.polyfit(np.log(ratios), np.log(ann), 1)[0] == pytest.approx(6, abs=0.1)


@settings(max_examples=50, deadline=None)
@given(st.floats(-7, 0), st.floats(-7, 0), st.sampled_from([0.5, 1.5, 2.5, 3.5]))
def test_content_over_phi_bounded(lj, lk, t):
    from heislimsup.svf import phi

    r = Radii(2.0**lj, 2.0**lk)
    ratio = content(build_cover(r, t), t) / phi(t, r).value
    assert 1 <= ratio < 1e4


def test_density_report_validation():
    with pytest.raises(ValueError):
        verify_density(trivial_cover(Radii(1, 1)), 0)
