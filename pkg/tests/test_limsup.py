import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heislimsup.group import DomainError, dist
from heislimsup.limsup import (
    HeisGrid,
    Window,
    block_coefficients,
    dimension_estimate,
    horizontal_disk_cells,
    occupied_cells,
    point_cells,
    rectangle_cells,
    sample_centers,
    simulate_generations,
    vertical_segment,
    window_cells,
)
from heislimsup.rng import make_rng
from heislimsup.svf import PowerLawSeq


def test_window():
    w = Window.unit()
    assert w.volume == 1.0
    np.testing.assert_array_equal(w.center, [0.5, 0.5, 0.5])
    with pytest.raises(DomainError):
        Window((0, 0, 0), (1, 0, 1))


def test_sample_centers():
    w = Window((-1, 0, 2), (1, 3, 2.5))
    pts = sample_centers(w, 20000, make_rng(1))
    assert w.contains(pts).all()
    se = (np.array(w.hi) - np.array(w.lo)) / math.sqrt(12 * 20000)
    assert np.all(np.abs(pts.mean(axis=0) - w.center) < 4 * se)
    np.testing.assert_array_equal(pts, sample_centers(w, 20000, make_rng(1)))
    with pytest.raises(ValueError):
        sample_centers(w, 0)


@settings(max_examples=100)
@given(st.floats(0.01, 1), st.integers(-50, 50), st.integers(-50, 50), st.integers(-500, 500),
       st.tuples(st.floats(0.001, 0.999), st.floats(0.001, 0.999), st.floats(0.001, 0.999)))
def test_cell_point_round_trip(delta, i, j, k, u):
    g = HeisGrid(delta, (0.1, -0.2, 0.05))
    idx = np.array([[i, j, k]])
    p = g.cell_point(idx, np.array([u]))
    np.testing.assert_array_equal(g.indices(p), idx)


def test_grid_cells_are_small():
    g = HeisGrid(0.1)
    rng = make_rng(2)
    idx = rng.integers(-100, 100, (10_000, 3))
    a = g.cell_point(idx, rng.random((10_000, 3)))
    b = g.cell_point(idx, rng.random((10_000, 3)))
    c_grid = dist(a, b).max() / g.delta
    assert c_grid <= 13**0.25
    assert c_grid <= 4


def test_grid_rejects_bad_step():
    with pytest.raises(DomainError):
        HeisGrid(0.0)


def test_single_rectangle_is_order_one():
    delta = 0.05
    g = HeisGrid(delta)
    c = np.array([[0.5, 0.5, 0.5]])
    n = len(np.unique(np.concatenate(rectangle_cells(c, delta, delta, g)), axis=0))
    assert 1 <= n <= 27


def test_occupied_counts():
    w = Window.unit()
    g = HeisGrid(0.1)
    seq = PowerLawSeq(0.5, 0.5)
    centers = sample_centers(w, 50, make_rng(3))
    counts = [occupied_cells(centers, seq, (10, hi), g, w) for hi in range(10, 51, 5)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert counts[-1] <= window_cells(w, g)
    with pytest.raises(DomainError):
        occupied_cells(centers, seq, (0, 5), g, w)
    with pytest.raises(DomainError):
        occupied_cells(centers, seq, (5, 51), g, w)


def test_far_apart_rectangles_add():
    g = HeisGrid(0.1)
    centers = np.array([[0.0, 0.0, 0.0], [100.0, 0.0, 0.0]])
    r1, r2 = np.array([0.5, 0.3]), np.array([0.4, 0.3])
    blocks = rectangle_cells(centers, r1, r2, g, batch=1)
    assert len(blocks) == 2
    union = len(np.unique(np.concatenate(blocks), axis=0))
    assert union == len(blocks[0]) + len(blocks[1])


def test_window_cells_against_probes():
    w = Window((0.1, 0.2, 0.0), (0.9, 0.7, 0.5))
    g = HeisGrid(0.25, (0.01, 0.02, 0.003))
    exact = window_cells(w, g)
    x, y, z = np.linspace(0.1, 0.9, 81), np.linspace(0.2, 0.7, 51), np.linspace(0.0, 0.5, 201)
    pts = np.stack(np.meshgrid(x, y, z, indexing="ij"), axis=-1).reshape(-1, 3)
    # cells met only in thin slivers sit at column corners on the top or bottom face
    eps = 1e-9
    xs = np.clip(np.concatenate([np.arange(-1, 5) * g.delta + 0.01 + o for o in (eps, -eps)]), 0.1, 0.9)
    ys = np.clip(np.concatenate([np.arange(-1, 4) * g.delta + 0.02 + o for o in (eps, -eps)]), 0.2, 0.7)
    X, Y, Z = np.meshgrid(xs, ys, [0.0, 0.5], indexing="ij")
    corners = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    assert point_cells(pts, g) < exact
    assert point_cells(np.vstack([pts, corners]), g) == exact


def test_ambient_slope():
    w = Window.unit()
    counts = [(2.0**-i, window_cells(w, HeisGrid(2.0**-i))) for i in range(5, 10)]
    fit = dimension_estimate(counts)
    assert fit.slope == pytest.approx(4.0, abs=0.1)
    # counts are comparable to delta^-4 vol(W) with a stable constant
    c = [n * d**4 for d, n in counts]
    assert max(c) / min(c) < 1.5


def test_vertical_segment_slope():
    counts = [(2.0**-i, point_cells(vertical_segment(1.0, 2.0**-i), HeisGrid(2.0**-i))) for i in range(3, 8)]
    assert dimension_estimate(counts).slope == pytest.approx(2.0, abs=0.2)


def test_horizontal_disk_is_three_dimensional():
    # a horizontal disk is not tangent to the horizontal distribution away from its centre,
    # so its box-counting dimension in the gauge metric is 3
    counts = [(2.0**-i, horizontal_disk_cells(1.0, HeisGrid(2.0**-i))) for i in range(6, 10)]
    assert dimension_estimate(counts).slope == pytest.approx(3.0, abs=0.1)


def test_horizontal_disk_cells_against_probes():
    g = HeisGrid(0.125)
    rng = make_rng(5)
    rad = np.sqrt(rng.random(400_000))
    ang = 2 * math.pi * rng.random(400_000)
    probes = np.column_stack([rad * np.cos(ang), rad * np.sin(ang), np.zeros_like(rad)])
    seen = point_cells(probes, g)
    assert abs(horizontal_disk_cells(1.0, g) - seen) <= 0.1 * seen


def test_dimension_estimate_validation():
    with pytest.raises(DomainError):
        dimension_estimate([(0.1, 10), (0.05, 20)])
    with pytest.raises(DomainError):
        dimension_estimate([(0.1, 10), (0.08, 20), (0.06, 30)])
    with pytest.raises(DomainError):
        dimension_estimate([(0.1, 10), (0.05, 0), (0.01, 30)])
    fit = dimension_estimate([(2.0**-i, 2.0 ** (3 * i)) for i in range(1, 5)])
    assert fit.slope == pytest.approx(3.0) and fit.r2_fit == pytest.approx(1.0)


def test_isotropic_generations():
    seq = PowerLawSeq(0.5, 0.5)
    gens = simulate_generations(seq, [100, 1000, 10_000], Window.unit(), seed=1)
    assert dimension_estimate([(g.delta, g.occupied) for g in gens]).slope == pytest.approx(2.0, abs=0.3)
    again = simulate_generations(seq, [100, 1000, 10_000], Window.unit(), seed=1)
    assert [g.occupied for g in gens] == [g.occupied for g in again]
    assert gens[0].log_occupied == pytest.approx(math.log(gens[0].occupied))


# block coefficients -------------------------------------------------------------

def test_blocks_constant_weights():
    t = block_coefficients(np.ones(1 << 12), 1 << 12)
    for n in range(1, t.n_blocks + 1):
        k, a = t.row(n)
        assert len(k) == 2**n
        assert np.all(a == 2.0**-n)
    np.testing.assert_array_equal(t.starts[1:], t.ends[:-1] + 1)


def test_blocks_log_weights():
    t = block_coefficients(lambda k: 1 + np.log(k), 200_000)
    stats = t.all_row_stats()
    assert all(abs(s - 1) <= 1e-12 for s, _ in stats)
    w = [v for _, v in stats]
    assert all(b < a for a, b in zip(w, w[1:]))
    assert all(v <= 2.0**-n for n, v in enumerate(w, 1))
    np.testing.assert_allclose(w, t.a, rtol=1e-12)
    assert np.all(np.diff(t.starts) > 0)
    # sum a^2 over each row is at most sup(1/b) times 2^-n
    for n in range(1, t.n_blocks + 1):
        _, a = t.row(n)
        assert np.sum(a * a) <= 2.0**-n


def test_blocks_shortfall_names_gap():
    with pytest.raises(DomainError, match="falls short"):
        block_coefficients(np.ones(100), 100, 10)
    with pytest.raises(DomainError):
        block_coefficients(np.ones(1), 1)
    with pytest.raises(DomainError):
        block_coefficients(np.ones(10), 20)
    with pytest.raises(DomainError):
        block_coefficients(np.array([1.0, 0.0, 1.0]), 3)
    with pytest.raises(DomainError):
        block_coefficients(np.array([1.0, np.nan, 1.0]), 3)


def test_blocks_row_sum_matches_fsum():
    t = block_coefficients(lambda k: 1 + np.log(k), 100_000, 10)
    for n in range(1, 11):
        _, a = t.row(n)
        assert t.row_sum(n) == pytest.approx(math.fsum(a), rel=1e-14)
        k, _ = t.row(n)
        assert t.weighted_square_sum(n) == pytest.approx(math.fsum(a * a * (1 + np.log(k))), rel=1e-13)
