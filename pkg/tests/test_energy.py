import math

import numpy as np
import pytest

from heislimsup.energy import (
    SPHERE_MEASURE,
    BoundCase,
    EnergyEstimate,
    _singular_offsets,
    box_kernel,
    capacity_lower_bound,
    energy_bound_rect,
    kernel_comparability,
    riesz_energy_ball,
    riesz_energy_rect,
)
from heislimsup.group import UNIT_BALL_VOLUME, DomainError, Radii, _norm, ball_volume, rect_volume, sample_ball
from heislimsup.rng import make_rng


def agree(a: EnergyEstimate, b: EnergyEstimate, k=4.0):
    return abs(a.value - b.value) <= k * math.hypot(a.stderr, b.stderr)


# estimator -----------------------------------------------------------------

@pytest.mark.parametrize("r,t", [(Radii(1, 0.5), 0.5), (Radii(0.3, 1), 1.5), (Radii(1, 1), 1.0)])
def test_mixture_agrees_with_plain_sampling(r, t):
    # plain pair sampling has finite variance for t < 2, so it is an independent oracle there
    mix = riesz_energy_rect(r, t, 200_000, 1)
    plain = riesz_energy_rect(r, t, 200_000, 2, method="uniform")
    assert agree(mix, plain)


def test_ball_mixture_agrees_with_plain_sampling():
    assert agree(riesz_energy_ball(1.0, 0.5, 200_000, 3), riesz_energy_ball(1.0, 0.5, 200_000, 4, method="uniform"))


def test_small_t_limit_is_squared_volume():
    for r in (Radii(1, 1), Radii(0.5, 2)):
        e = riesz_energy_rect(r, 0.01, 50_000, 5)
        assert e.value / rect_volume(r) ** 2 == pytest.approx(1.0, abs=0.02)
    e = riesz_energy_ball(2.0, 0.01, 50_000, 5)
    assert e.value / ball_volume(2.0) ** 2 == pytest.approx(1.0, abs=0.02)


def test_singular_offsets_follow_power_density():
    # density |w|^-t on B(0, D): E|w|^a = (4 - t) / (4 - t + a) D^a
    t, D = 3.0, 0.7
    w = _singular_offsets(t, np.full(200_000, D), make_rng(6), 200_000)
    s = _norm(w)
    assert s.max() <= D * (1 + 1e-12)
    for a in (1.0, 2.0):
        assert np.mean(s**a) == pytest.approx((4 - t) / (4 - t + a) * D**a, rel=0.01)


def test_power_integral_normaliser():
    # int_{B(0,1)} |w|^-t dw = 4 kappa / (4 - t), checked by uniform ball sampling
    t = 0.5
    w = sample_ball((0, 0, 0), 1.0, make_rng(7), 400_000)
    est = UNIT_BALL_VOLUME * np.mean(_norm(w) ** -t)
    assert est == pytest.approx(SPHERE_MEASURE / (4 - t), rel=0.01)


def test_ball_scaling():
    t = 2.5
    a = riesz_energy_ball(0.5, t, 100_000, 8)
    b = riesz_energy_ball(1.0, t, 100_000, 9)
    ratio = b.value / a.value
    err = ratio * math.hypot(a.rel_err, b.rel_err)
    assert abs(ratio - 2 ** (8 - t)) <= 3 * err


def test_isotropic_rect_scaling():
    t = 3.5
    a = riesz_energy_rect(Radii(1, 1), t, 100_000, 10)
    b = riesz_energy_rect(Radii(0.25, 0.25), t, 100_000, 11)
    ratio = a.value / b.value
    assert abs(ratio - 4 ** (8 - t)) <= 3 * ratio * math.hypot(a.rel_err, b.rel_err)


def test_stderr_halves_with_fourfold_pairs():
    ratios = []
    for seed in range(10):
        a = riesz_energy_rect(Radii(1, 0.5), 3.5, 20_000, seed)
        b = riesz_energy_rect(Radii(1, 0.5), 3.5, 40_000, seed + 100)
        ratios.append(b.stderr / a.stderr)
    assert np.mean(ratios) == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_stderr_is_calibrated():
    vals = [riesz_energy_rect(Radii(0.5, 1), 2.5, 20_000, s) for s in range(30)]
    spread = np.std([v.value for v in vals], ddof=1)
    assert 0.6 < spread / np.mean([v.stderr for v in vals]) < 1.5


def test_determinism_and_streams():
    a = riesz_energy_rect(Radii(1, 1), 2.5, 70_000, 42)
    assert a == riesz_energy_rect(Radii(1, 1), 2.5, 70_000, 42)
    assert a.value != riesz_energy_rect(Radii(1, 1), 2.5, 70_000, 42, stream=(1,)).value
    assert a.n_pairs == 70_000 and a.seed == 42 and a.method == "mixture"


def test_energy_domain():
    for t in (0.0, 4.0, -1.0):
        with pytest.raises(DomainError):
            riesz_energy_rect(Radii(1, 1), t, 100)
    with pytest.raises(ValueError):
        riesz_energy_rect(Radii(1, 1), 1.0, 0)
    with pytest.raises(ValueError):
        riesz_energy_rect(Radii(1, 1), 1.0, 100, method="quadrature")
    with pytest.raises(DomainError):
        riesz_energy_ball(-1.0, 1.0, 100)


def test_plain_sampling_reports_resamples():
    e = riesz_energy_rect(Radii(1, 1), 0.5, 1000, 0, method="uniform")
    assert e.resampled == 0 and e.method == "uniform"


# closed-form bounds ---------------------------------------------------------

def test_bound_examples():
    b = energy_bound_rect(0.5, Radii(0.1, 1))
    assert b.bound == pytest.approx(1e-4) and b.case_tag is BoundCase.THIN_LOW
    b = energy_bound_rect(3.5, Radii(1, 0.1))
    assert b.bound == pytest.approx(1e-3) and b.case_tag is BoundCase.FLAT_HIGH
    assert energy_bound_rect(2.5, Radii(0.1, 1)).case_tag is BoundCase.THIN_HIGH
    assert energy_bound_rect(1.5, Radii(1, 0.1)).case_tag is BoundCase.FLAT_LOW


@pytest.mark.parametrize("t", [1.0, 2.0, 3.0])
def test_bound_rejects_breakpoints(t):
    with pytest.raises(DomainError, match="logarithmic"):
        energy_bound_rect(t, Radii(1, 0.5))


@pytest.mark.parametrize("t", [0.5, 1.5, 2.5, 3.5])
def test_bound_diagonal(t):
    from heislimsup.energy import _bound_formula

    c = 0.37
    thin, _ = _bound_formula(t, c, c, True)
    flat, _ = _bound_formula(t, c, c, False)
    assert thin == pytest.approx(flat, rel=1e-14)
    assert thin == pytest.approx(c ** (8 - t), rel=1e-14)


def test_energy_tracks_bound_across_shapes():
    for r, t in ((Radii(2**-3, 1), 0.5), (Radii(2**-6, 1), 0.5), (Radii(1, 2**-3), 3.5), (Radii(1, 2**-6), 3.5)):
        e = riesz_energy_rect(r, t, 50_000, 12)
        assert 0.1 < e.value / energy_bound_rect(t, r).bound < 1e3


# capacity and kernel ---------------------------------------------------------

def test_capacity_scaling_isotropic():
    t = 1.5
    caps = []
    for i, c in enumerate((1.0, 0.5)):
        r = Radii(c, c)
        caps.append(capacity_lower_bound(r, t, riesz_energy_rect(r, t, 100_000, 20 + i)))
    assert caps[0] / caps[1] == pytest.approx(2**t, rel=0.03)


def test_capacity_rejects_bad_energy():
    with pytest.raises(DomainError):
        capacity_lower_bound(Radii(1, 1), 1.0, EnergyEstimate(0.0, 0.0, 1, 1.0, 0))


def test_box_kernel_examples():
    assert box_kernel(0, (0, 0, 4)) == 2
    assert box_kernel(1, (0, 1, 2)) == 1
    assert box_kernel(0.5, (0, 0, 0)) == 0
    out = box_kernel(1.0, np.array([[0, 0, 4], [3, 0, 0]]))
    np.testing.assert_array_equal(out, [2, 3])


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("z0", [0.0, 0.5])
def test_kernel_comparability(rho, z0):
    rep = kernel_comparability(rho, z0, 10_000, make_rng(30))
    assert 0.5 <= rep.min_ratio and rep.max_ratio <= 2
    # max versus l^4-type gauge: the ratio lies in [1, 5^(1/4)]
    assert rep.min_ratio >= 1 - 1e-12 and rep.max_ratio <= 5**0.25 + 1e-12


def test_kernel_comparability_planar_reduction():
    from heislimsup.group import dist

    rho, z0 = 0.5, 0.5
    p = np.array([rho, 0.0, z0])
    q = np.array([rho + 0.3, 0.0, z0])
    assert dist(p, q) / box_kernel(rho, q - p) == pytest.approx(1.0)
