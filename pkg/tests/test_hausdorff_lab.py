import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qclab.beltrami_solver import radial_stretch_map
from qclab.errors import DomainError, FitError, OutOfDomainError
from qclab.field_core import GridSpec
from qclab.hausdorff_lab import (
    box_dimension,
    covering_sums,
    generate_quasiline,
    multiscale_cells,
    preimage_intervals,
    quasiline_points,
    theorem_main_check,
    three_point_ratios,
)

GRID = GridSpec(2.0, 256)


def ident(z):
    return np.asarray(z, dtype=complex)


@pytest.fixture(scope="module")
def line():
    return generate_quasiline(0.0, 0, GRID)


@pytest.fixture(scope="module")
def wiggly():
    return generate_quasiline(0.3, 4, GridSpec(2.0, 512))


def test_cells_are_dyadic():
    assert multiscale_cells(1 / 32) == (0.25, 0.125, 0.0625, 0.03125)


def test_zero_dilatation_gives_the_real_line(line):
    pts = quasiline_points(line, -0.9, 0.9, 1001)
    np.testing.assert_array_equal(pts.imag, 0)
    np.testing.assert_allclose(pts.real, np.linspace(-0.9, 0.9, 1001), atol=1e-15)


def test_quasiline_reproducible(wiggly):
    again = generate_quasiline(0.3, 4, GridSpec(2.0, 512))
    np.testing.assert_array_equal(again.displacement.samples, wiggly.displacement.samples)
    with pytest.raises(DomainError):
        generate_quasiline(1.0, 0, GRID)


def test_three_point_ratios_bounded(wiggly):
    r = three_point_ratios(wiggly, -0.9, 0.9)
    assert np.all(np.isfinite(r))
    c = r.max()
    assert c <= 10 and r.min() >= 1 / 10


def test_identity_lengths_add():
    s = covering_sums(ident, [(-0.5, 0.5)], (0.0, 1.0), 1.0, 8)
    np.testing.assert_allclose(s.sums, 1.0, rtol=1e-14)
    assert s.counts[1:] == [2 ** (m - 1) for m in range(2, 9)]


def test_identity_supercritical_closed_form():
    s = covering_sums(ident, [(-0.5, 0.5)], (0.0, 1.0), 1.25, 8)
    for m, count, val in list(zip(s.generations, s.counts, s.sums))[1:]:
        assert val == pytest.approx(count * (2 * 2.0**-m) ** 1.25, rel=1e-13)
    assert s.sums[-1] / s.sums[-2] == pytest.approx(2**-0.25, rel=1e-13)


def test_radial_stretch_image_length():
    s = covering_sums(radial_stretch_map, [(-0.5, 0.5)], (0.0, 1.0), 1.0, 8)
    assert all(abs(v - 0.5) <= 0.05 * 0.5 for v in s.sums[1:])


@given(st.floats(-0.9, 0.0), st.floats(0.01, 0.4), st.floats(0.01, 0.4))
def test_identity_additive_over_disjoint_sets(a, len1, gap):
    E1 = (a, a + len1)
    E2 = (a + len1 + gap, min(a + len1 + gap + 0.3, 0.99))
    if E2[1] <= E2[0]:
        return
    both = covering_sums(ident, [E1, E2], (0.0, 1.0), 1.0, 6)
    one = covering_sums(ident, [E1], (0.0, 1.0), 1.0, 6)
    two = covering_sums(ident, [E2], (0.0, 1.0), 1.0, 6)
    np.testing.assert_allclose(both.sums, np.add(one.sums, two.sums), rtol=1e-13)


@given(st.floats(0.5, 1.5), st.floats(0.01, 0.5))
def test_sums_decrease_in_exponent(s, ds):
    lo = covering_sums(ident, [(-0.5, 0.5)], (0.0, 1.0), s, 6)
    hi = covering_sums(ident, [(-0.5, 0.5)], (0.0, 1.0), s + ds, 6)
    assert all(b <= a for a, b in zip(lo.sums, hi.sums))


def test_truncation_and_subgrid(wiggly):
    cut = covering_sums(wiggly, [(-0.5, 0.5)], (0.0, 1.0), 1.09, 12, 0.3)
    assert cut.truncated and max(cut.generations) < 12
    deep = covering_sums(wiggly, [(-0.5, 0.5)], (0.0, 1.0), 1.09, 12, 0.3, allow_subgrid=True)
    assert deep.generations == list(range(1, 13)) and deep.subgrid
    assert min(deep.subgrid) == max(cut.generations) + 1


def test_covering_sum_errors(wiggly):
    with pytest.raises(DomainError):
        covering_sums(ident, [(-0.5, 0.5)], (0.0, 1.0), 2.5, 4)
    with pytest.raises(DomainError):
        covering_sums(ident, [(0.5, 0.5)], (0.0, 1.0), 1.0, 4)
    with pytest.raises(OutOfDomainError):
        covering_sums(wiggly, [(-1.5, 0.5)], (0.0, 2.0), 1.0, 4)


def test_ball_doubling_keeps_normalized_ratio(wiggly):
    k = 0.3
    s = 1 + k * k
    small = covering_sums(wiggly, [(-0.25, 0.25)], (0.0, 0.5), s, 8, k)
    big = covering_sums(wiggly, [(-0.25, 0.25)], (0.0, 1.0), s, 9, k)
    ratio = max(big.normalized) / max(small.normalized)
    assert 0.5 <= ratio <= 2


def test_preimage_of_identity_ball():
    E = preimage_intervals(ident, 0.1, 0.3, -1.0, 1.0, 0.01)
    assert len(E) == 1
    assert E[0][0] == pytest.approx(-0.2, abs=1e-12) and E[0][1] == pytest.approx(0.4, abs=1e-12)


def test_local_check_on_a_straight_line(line):
    rep = theorem_main_check(line, 0.0, 0.1, 0.3, 6)
    assert rep.sup_ratio == pytest.approx(2.0, rel=1e-9)
    assert not rep.flagged


def test_local_check_bounded_on_quasiline(wiggly):
    rep = theorem_main_check(wiggly, 0.3, 0.05, 0.3, 7)
    r = np.asarray(rep.ratios)
    assert np.all(np.isfinite(r)) and r.max() <= 3 * r[3]


def test_box_dimension_of_smooth_curves(line):
    x = np.linspace(0, 1, 200_000)
    seg = x + 0.5j * x
    assert abs(box_dimension(seg).slope - 1) <= 0.02
    circle = np.exp(2j * np.pi * x)
    # curvature inflates the coarsest counts, so start below the radius
    assert abs(box_dimension(circle, scales=[2.0**-j for j in range(3, 12)]).slope - 1) <= 0.02
    flat = quasiline_points(line, -1.0, 1.0, 2**16)
    assert abs(box_dimension(flat, finest=2 * line.spec.h).slope - 1) <= 0.02


def test_box_dimension_errors():
    with pytest.raises(FitError):
        box_dimension(np.linspace(0, 1, 100) + 0j)
    with pytest.raises(FitError):
        box_dimension(np.linspace(0, 1, 20_000) + 0j, scales=[0.5, 0.25, 0.125])
