import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.spatial import cKDTree
from scipy.stats import qmc

from qclab.beltrami_solver import BeltramiCoefficient, solve_principal
from qclab.errors import DomainError, RefineGridError, ResolutionError
from qclab.field_core import GridSpec
from qclab.regions import Disk, Region
from qclab.reports import canonical_json
from qclab.riemann_boundary import (
    Cap,
    DiskQuadrature,
    Identity,
    PolarQuadrature,
    PowerMap,
    Scaled,
    SolvedMapSampler,
    area_distortion,
    default_rho_grid,
    layer_cake_consistency,
    lens_area,
    solver_backed_riemann_tail,
    tail_statistics,
)

SMALL_POLAR = PolarQuadrature(n_radial=4096, n_angular=192, s_min=1e-8)


def cap_image_area(k, delta):
    """Polar integral of |phi'|^2 over D ∩ B(-1, delta), done by scipy."""
    c = ((1 - k) / 2) ** 2 * 4**k

    def inner(theta):
        top = min(delta, 2 * math.cos(theta))
        return c * top ** (2 - 2 * k) / (2 - 2 * k)

    return integrate.quad(inner, -math.pi / 2, math.pi / 2, limit=200)[0]


@pytest.mark.parametrize("c", [1e-4, 0.01, 0.09, 0.1, 0.5, 1.0, 1.7])
def test_lens_area_matches_quadrature(c):
    def chord(x):
        # vertical extent of D ∩ B(-1, c) at abscissa x
        a = math.sqrt(max(0.0, 1 - x * x))
        b = math.sqrt(max(0.0, c * c - (x + 1) ** 2))
        return 2 * min(a, b)

    ref = integrate.quad(chord, -1, -1 + c, limit=200, epsabs=0, epsrel=1e-12)[0]
    assert lens_area(c) == pytest.approx(ref, rel=1e-9)


def test_lens_area_limits():
    assert lens_area(0) == 0
    assert lens_area(2) == math.pi
    assert lens_area(5) == math.pi


@pytest.mark.parametrize("k", [0.1, 0.3, 0.5, 0.9])
def test_power_map_derivative_at_zero(k):
    phi = PowerMap(k)
    assert phi.derivative_at_zero == pytest.approx((1 - k) * 2 ** (k - 1), rel=1e-15)
    assert abs(phi.derivative(0j)) == pytest.approx(phi.derivative_at_zero, rel=1e-14)
    with pytest.raises(DomainError):
        PowerMap(1.0)


@given(st.floats(0.05, 0.95))
def test_power_map_derivative_matches_difference_quotient(k):
    phi = PowerMap(k)
    z = np.array([0.3 + 0.2j, -0.5 + 0.1j, 0.1 - 0.7j])
    eps = 1e-6
    fd = (phi(z + eps) - phi(z - eps)) / (2 * eps)
    assert np.allclose(fd, phi.derivative(z), rtol=1e-7)


@pytest.mark.parametrize("k", [0.3, 0.5, 0.7])
def test_power_map_injective_on_samples(k):
    pts = qmc.Halton(d=2, seed=0).random(10_000)
    r, th = np.sqrt(pts[:, 0]) * 0.999, 2 * np.pi * pts[:, 1]
    z = r * np.exp(1j * th)
    w = PowerMap(k)(z)
    tree = cKDTree(np.c_[w.real, w.imag])
    pairs = tree.query_pairs(1e-9, output_type="ndarray")
    assert all(abs(z[a] - z[b]) < 1e-6 for a, b in pairs)


def test_identity_tails_jump_at_one():
    rhos = np.array([0.5, 0.9, 0.999, 1.0, 1.001, 2.0])
    tails = tail_statistics(Identity(), 0.5, rhos, DiskQuadrature(0j, 1.0, 2048), min_nodes=2048**2 // 2)
    m = np.array(tails.measures)
    assert np.allclose(m[:3], math.pi, rtol=2e-3)
    assert np.all(m[3:] == 0)
    assert np.all(np.isfinite(tails.scaled))


def test_empty_tails_flag_degenerate():
    tails = tail_statistics(Identity(), 0.5, [2.0, 4.0, 8.0], SMALL_POLAR, min_nodes=0)
    assert tails.degenerate


def test_tail_resolution_guard():
    with pytest.raises(ResolutionError):
        tail_statistics(PowerMap(0.5), 0.5, quadrature=SMALL_POLAR)
    with pytest.raises(ResolutionError):
        solver_backed_riemann_tail(0.5, 0, GridSpec(4.0, 64), n=256)
    with pytest.raises(DomainError):
        tail_statistics(PowerMap(0.5), 1.0)


@pytest.mark.parametrize("k", [0.3, 0.7])
def test_power_map_tails_match_lens_area(k):
    phi = PowerMap(k)
    rhos = default_rho_grid(k, points=13)
    tails = tail_statistics(phi, k, rhos, SMALL_POLAR, min_nodes=0)
    exact = phi.superlevel_area(rhos)
    assert np.allclose(tails.measures, exact, rtol=0.01)
    assert np.all(np.diff(tails.measures) <= 0)
    assert tails.slope == pytest.approx(-2 / k, abs=0.05)


def test_power_map_constant_is_limit():
    k = 0.5
    phi = PowerMap(k)
    rho = np.geomspace(10, 1e4, 5)
    scaled = rho ** (2 / k) * phi.superlevel_area(rho)
    assert scaled[-1] == pytest.approx(phi.weak_constant(), rel=1e-4)
    # the lens is slightly smaller than a half disk, so the limit is approached from below
    assert np.all(scaled <= phi.weak_constant())


@given(st.floats(0.1, 10.0), st.floats(0.0, 2 * math.pi))
def test_scaling_shifts_tails(c, angle):
    k = 0.5
    rhos = default_rho_grid(k, points=9)
    base = tail_statistics(PowerMap(k), k, rhos, SMALL_POLAR, min_nodes=0)
    scaled = tail_statistics(Scaled(PowerMap(k), c * np.exp(1j * angle)), k, c * rhos, SMALL_POLAR, min_nodes=0)
    assert np.allclose(scaled.measures, base.measures, rtol=1e-12, atol=1e-300)
    assert scaled.sup_scaled == pytest.approx(c ** (2 / k) * base.sup_scaled, rel=1e-9)
    assert scaled.normalized_constant == pytest.approx(base.normalized_constant, rel=1e-9)


@pytest.mark.parametrize("region", [Cap(0.3), Disk(0.2 + 0.1j, 0.4)])
def test_identity_area_ratio_is_area_to_k(region):
    k = 0.4
    rep = area_distortion(Identity(), region, k)
    assert rep.ratio == pytest.approx(rep.region_area**k, rel=1e-3)
    assert rep.image_area == pytest.approx(rep.region_area, rel=1e-3)


def test_empty_region_gives_zero():
    assert area_distortion(PowerMap(0.5), Cap(0.0), 0.5).ratio == 0
    assert area_distortion(PowerMap(0.5), Region(()), 0.5).ratio == 0
    rep = layer_cake_consistency(PowerMap(0.5), Cap(0.0), 0.5)
    assert rep.direct == rep.layered == 0


@pytest.mark.parametrize("k", [0.3, 0.5])
def test_power_cap_image_area_matches_scipy(k):
    for delta in (2.0**-3, 2.0**-6):
        rep = area_distortion(PowerMap(k), Cap(delta), k)
        assert rep.image_area == pytest.approx(cap_image_area(k, delta), rel=1e-3)
        assert not rep.boundary_flag


def test_cap_ratios_stable_across_scales():
    k = 0.5
    ratios = [area_distortion(PowerMap(k), Cap(2.0**-j), k).ratio for j in range(3, 9)]
    mid = (max(ratios) + min(ratios)) / 2
    assert max(ratios) / mid - 1 <= 0.10


def test_boundary_flag_for_solved_maps():
    sol = solve_principal(BeltramiCoefficient.zero(GridSpec(4.0, 128)))
    rep = area_distortion(SolvedMapSampler(sol, 0.1), Disk(0.5, 0.49), 0.5, DiskQuadrature(0.5, 0.49, 128))
    assert rep.boundary_flag


def test_area_resolution_error():
    # too few nodes for the singular corner to settle between resolutions
    with pytest.raises(ResolutionError):
        area_distortion(PowerMap(0.9), Cap(1.0), 0.9, PolarQuadrature(4, 4, 0.5, 1.0))


def test_layer_cake_identity_and_power():
    ident = layer_cake_consistency(Identity(), Disk(0j, 0.5), 0.5)
    assert ident.direct == pytest.approx(math.pi / 4, rel=0.01)
    assert ident.discrepancy <= 0.01
    k = 0.5
    rep = layer_cake_consistency(PowerMap(k), Cap(0.25), k)
    assert rep.discrepancy <= 0.03
    assert rep.direct == pytest.approx(cap_image_area(k, 0.25), rel=0.01)
    assert rep.split_point == pytest.approx(lens_area(0.25) ** (-k / 2))
    assert rep.below_split + rep.above_split == pytest.approx(rep.layered)


def test_layer_cake_coarse_grid_error():
    with pytest.raises(RefineGridError):
        layer_cake_consistency(PowerMap(0.5), Cap(0.25), 0.5, n_thresholds=3)


@pytest.fixture(scope="module")
def small_spec():
    return GridSpec(4.0, 256)


def test_solver_backed_zero_dilatation_is_identity(small_spec):
    tails, sol = solver_backed_riemann_tail(0.5, 0, small_spec, n=1024, points=21, mu_scale=0.0, min_nodes=0)
    assert np.max(np.abs(sol.displacement.samples)) < 1e-12
    assert tails.derivative_at_zero == pytest.approx(1.0, abs=1e-9)
    m = np.array(tails.measures)
    rhos = np.array(tails.rhos)
    assert np.all(m[rhos > 1 + 1e-6] == 0)
    assert np.allclose(m[rhos < 1 - 1e-6], math.pi * 0.95**2, rtol=0.01)


def test_solver_backed_reproducible(small_spec):
    a, _ = solver_backed_riemann_tail(0.5, 3, small_spec, n=1024, points=21, min_nodes=0)
    b, _ = solver_backed_riemann_tail(0.5, 3, small_spec, n=1024, points=21, min_nodes=0)
    assert canonical_json(a) == canonical_json(b)
