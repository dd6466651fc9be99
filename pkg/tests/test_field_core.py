import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rel
from qclab.errors import CompactSupportWarning, ConfigurationError
from qclab.field_core import (
    BEURLING,
    ComplexField,
    GridSpec,
    beurling_transform,
    cauchy_transform,
    d_bar,
    d_z,
    dump_field,
    load_field,
    planar_beurling_transform,
    planar_cauchy_transform,
    weierstrass_coefficients,
)
from qclab.oracles import direct_beurling_quadrature

SPEC = GridSpec(4.0, 512)
SMALL = GridSpec(4.0, 64)


def band_noise(spec, seed, mean_zero=True):
    rng = np.random.default_rng(seed)
    raw = (rng.standard_normal((spec.N, spec.N)) + 1j * rng.standard_normal((spec.N, spec.N))) * spec.guard_mask
    if mean_zero:
        raw[spec.guard_mask] -= raw[spec.guard_mask].mean()
    return ComplexField(spec, raw)


def smooth_step(x):
    """C-infinity transition from 0 (x <= 0) to 1 (x >= 1)."""
    x = np.clip(x, 0, 1)
    a = np.where(x > 0, np.exp(-1 / np.where(x > 0, x, 1)), 0)
    b = np.where(x < 1, np.exp(-1 / np.where(x < 1, 1 - x, 1)), 0)
    return a / (a + b)


def test_grid_layout():
    s = GridSpec(2.0, 16)
    assert s.h == 0.25
    assert s.z[0, 0] == -2 - 2j
    assert s.z[3, 5] == complex(-2 + 3 * 0.25, -2 + 5 * 0.25)
    assert s.z[0, s.real_axis_index].imag == 0
    j = np.arange(16)
    np.testing.assert_array_equal(s.z[:, s.mirror_index()][:, j[1:]], np.conj(s.z[:, j[1:]]))


@pytest.mark.parametrize("L,N", [(0, 16), (-1, 16), (1, 15), (1, 8), (float("inf"), 16)])
def test_grid_rejects_bad_parameters(L, N):
    with pytest.raises(ConfigurationError):
        GridSpec(L, N)


def test_field_shape_mismatch():
    with pytest.raises(ConfigurationError):
        ComplexField(SMALL, np.zeros((32, 32)))
    with pytest.raises(ConfigurationError):
        ComplexField.zeros(SMALL) + ComplexField.zeros(GridSpec(4.0, 32))


def test_zero_maps_to_zero():
    z = ComplexField.zeros(SMALL)
    for op in (beurling_transform, cauchy_transform, d_bar, d_z):
        assert op(z).sup_norm() == 0


def test_beurling_symbol_is_unimodular():
    vals = BEURLING.values(SMALL)
    zeta = SMALL.frequencies
    assert vals[zeta == 0] == 0
    np.testing.assert_allclose(np.abs(vals[zeta != 0]), 1, atol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_parseval_for_mean_zero_fields(seed):
    f = band_noise(GridSpec(4.0, 64), seed)
    assert abs(beurling_transform(f).l2_norm() - f.l2_norm()) <= 1e-12 * f.l2_norm()


@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_operators_are_linear(seed, c):
    f = band_noise(SMALL, seed, mean_zero=False)
    g = band_noise(SMALL, seed + 1, mean_zero=False)
    for op in (beurling_transform, cauchy_transform, d_bar):
        lhs = op(f + c * g).samples
        rhs = (op(f) + c * op(g)).samples
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(np.linalg.norm(rhs), 1e-300) + 1e-12


def test_beurling_of_disk_indicator():
    z = SPEC.z
    S = beurling_transform(ComplexField.from_function(SPEC, lambda w: (np.abs(w) < 1).astype(float))).samples
    ring = (np.abs(z) > 1.1) & (np.abs(z) < 2)
    assert rel(S[ring], -1 / z[ring] ** 2) <= 0.02
    inner = np.abs(z) < 0.9
    assert np.sqrt(np.mean(np.abs(S[inner]) ** 2)) <= 0.02


def test_beurling_matches_direct_quadrature_on_bumps():
    # direct principal-value lattice sums of -1/(pi z^2) on a coarse grid
    for n in range(5):
        r = np.random.default_rng([11, n])
        c = complex(*r.uniform(-0.8, 0.8, 2))
        s = r.uniform(0.3, 0.5)
        f = ComplexField.from_function(SMALL, lambda w: np.exp(-np.abs(w - c) ** 2 / (2 * s * s)) * SMALL.guard_mask)
        fast = planar_beurling_transform(f, where=SMALL.guard_mask).samples[SMALL.guard_mask]
        slow = direct_beurling_quadrature(f, SMALL.guard_mask)
        assert rel(fast, slow) <= 0.02


def test_beurling_intertwines_derivatives(quiet_support):
    bump = ComplexField.from_function(SPEC, lambda w: np.exp(-np.abs(w - 0.2 + 0.1j) ** 2 / 0.18))
    assert rel(beurling_transform(d_bar(bump)).samples, d_z(bump).samples) <= 1e-8


def test_cauchy_inverts_d_bar(quiet_support):
    rng = np.random.default_rng(3)
    coeffs = np.zeros((SMALL.N, SMALL.N), complex)
    coeffs[:6, :6] = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    coeffs[0, 0] = 0
    f = ComplexField(SMALL, np.fft.ifft2(coeffs))
    assert rel(d_bar(cauchy_transform(f)).samples, f.samples) <= 1e-10


def test_cauchy_of_disk_indicator():
    z = SPEC.z
    C = planar_cauchy_transform(ComplexField.from_function(SPEC, lambda w: (np.abs(w) < 1).astype(float))).samples
    inner = np.abs(z) < 0.9
    ring = (np.abs(z) > 1.1) & (np.abs(z) < 2)
    assert rel(C[inner], np.conj(z[inner])) <= 0.02
    assert rel(C[ring], 1 / z[ring]) <= 0.02


def test_constant_field_has_zero_derivatives():
    f = ComplexField(SMALL, np.full((SMALL.N, SMALL.N), 2 - 1j))
    assert d_bar(f).sup_norm() <= 1e-13
    assert d_z(f).sup_norm() <= 1e-13


def test_holomorphic_monomial_derivatives():
    L = SPEC.L
    r = np.maximum(np.abs(SPEC.z.real), np.abs(SPEC.z.imag))
    cut = 1 - smooth_step((r - L / 2) / (0.45 * L))
    f = ComplexField(SPEC, SPEC.z * cut)
    band = SPEC.guard_mask
    assert np.abs(d_z(f).samples[band] - 1).max() <= 1e-8
    assert np.abs(d_bar(f).samples[band]).max() <= 1e-8


def test_support_warning():
    f = ComplexField(SMALL, np.ones((SMALL.N, SMALL.N)))
    with pytest.warns(CompactSupportWarning):
        beurling_transform(f)


def test_weierstrass_series_matches_lattice_sum():
    L = 1.0
    c = weierstrass_coefficients(L, 10)
    w = 0.35 + 0.2j
    m = np.arange(-400, 401)
    lam = 2 * L * (m[:, None] + 1j * m[None, :])
    lam = lam[lam != 0]
    direct = np.sum(1 / (w - lam) ** 2 - 1 / lam**2)
    series = sum(c[n] * w ** (2 * n - 2) for n in range(2, 11))
    assert abs(direct - series) <= 1e-5 * abs(series)
    assert all(c[n] == 0 for n in (3, 5, 7, 9))


@pytest.mark.parametrize("fmt", ["bin", "csv"])
def test_dump_round_trip(tmp_path, fmt):
    f = band_noise(GridSpec(1.0, 16), 5, mean_zero=False)
    path = dump_field(f, tmp_path / f"f.{fmt}", fmt)
    g = load_field(path, f.spec, fmt)
    np.testing.assert_array_equal(f.samples, g.samples)
    with pytest.raises(ConfigurationError):
        load_field(path, GridSpec(1.0, 32), fmt)
