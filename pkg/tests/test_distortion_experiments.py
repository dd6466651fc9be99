import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qclab.beltrami_solver import BeltramiCoefficient, solve_principal
from qclab.distortion_experiments import (
    DiskOnLine,
    ExponentPair,
    corollary_ratio,
    corollary_report,
    exponent_t_of_k,
    nested_layout,
    random_layout,
    run_conformal_outside_trial,
    run_corollary_trial,
    run_smirnov_batch,
    smirnov_reports,
    smirnov_sums,
    validate_layout,
)
from qclab.dyadic_geometry import DyadicLattice, SquareFamily, packing_alpha
from qclab.errors import DomainError, LayoutError
from qclab.field_core import GridSpec

ts = st.floats(0.01, 2.0)
ks = st.floats(0.0, 0.99)
GRID = GridSpec(4.0, 256)


@pytest.fixture(scope="module")
def identity():
    return solve_principal(BeltramiCoefficient.zero(GRID))


def test_exponent_examples():
    assert exponent_t_of_k(2, 0.7) == 2
    assert exponent_t_of_k(1, 0.5) == 1.25
    assert exponent_t_of_k(0.8, 0) == 0.8
    assert ExponentPair(1.0, 0.3).t_of_k == pytest.approx(1.09, abs=1e-14)
    with pytest.raises(DomainError):
        exponent_t_of_k(2.1, 0.3)
    with pytest.raises(DomainError):
        exponent_t_of_k(1.0, 1.0)


@given(ts, ks)
def test_exponent_solves_relation(t, k):
    tk = exponent_t_of_k(t, k)
    lhs = 1 / tk - 0.5
    rhs = (1 - k * k) / (1 + k * k) * (1 / t - 0.5)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(1 / t))
    assert abs(exponent_t_of_k(1.0, k) - (1 + k * k)) <= 1e-14
    assert exponent_t_of_k(2.0, k) == 2.0
    assert abs(exponent_t_of_k(t, 0.0) - t) <= 1e-14


@given(st.floats(0.05, 1.95))
def test_exponent_increases_with_k(t):
    vals = [exponent_t_of_k(t, k) for k in np.linspace(0, 0.95, 40)]
    assert np.all(np.diff(vals) > 0)


@given(st.integers(0, 2**32 - 1))
def test_random_layout_is_valid(seed):
    disks = random_layout(np.random.default_rng(seed), 64)
    assert 1 <= len(disks) <= 64
    validate_layout(disks)


def test_layout_errors():
    with pytest.raises(LayoutError):
        validate_layout([DiskOnLine(0.0, 0.3), DiskOnLine(0.5, 0.3)])
    with pytest.raises(LayoutError):
        validate_layout([DiskOnLine(0.9, 0.3)])
    with pytest.raises(LayoutError):
        DiskOnLine(0.2 + 0.1j, 0.1)
    with pytest.raises(LayoutError):
        DiskOnLine(0.2, 0.0)


def test_smirnov_sums_by_hand():
    lhs, rhs = smirnov_sums(0.5, 1.0, [0.25], [1.0])
    assert lhs == pytest.approx(0.25, rel=1e-14)
    assert rhs == pytest.approx(8 * 0.25**0.6, rel=1e-14)


def test_identity_map_sums(identity):
    disks = nested_layout(3)
    reps = smirnov_reports(identity, disks, 0.4, [0.5, 1.0, 2.0])
    for rep in reps:
        tk = exponent_t_of_k(rep.t, 0.4)
        expect = math.fsum(d.radius**tk for d in disks) ** (1 / tk)
        assert rep.lhs == pytest.approx(expect, rel=1e-10)
        assert rep.passed and rep.ratio <= 1


def test_smirnov_batch_reproducible_and_passing():
    spec = GridSpec(4.0, 512)
    a = run_smirnov_batch(0.4, [0.5, 2.0], 3, spec, n_max=16)
    b = run_smirnov_batch(0.4, [0.5, 2.0], 3, spec, n_max=16)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    assert all(r.passed for r in a)


def test_corollary_identity_one_disk(identity):
    k = 0.4
    disk = DiskOnLine(0.1, 0.3)
    rep = corollary_report(identity, [disk], k, DiskOnLine(0.0, 1.0))
    assert rep.ratio == pytest.approx((0.6 / 2.0) ** (2 * k * k), rel=1e-10)


def test_corollary_identity_nested_levels_bounded():
    k = 0.4
    vals = []
    for level in range(2, 7):
        disks = nested_layout(level)
        d = [2 * x.radius for x in disks]
        vals.append(corollary_ratio(k, d, d, 2.0, 2.0))
    assert max(vals) / min(vals) <= 3


def test_corollary_trial_reproducible():
    a = run_corollary_trial(0.3, nested_layout(2), 5, GRID, level=2)
    b = run_corollary_trial(0.3, nested_layout(2), 5, GRID, level=2)
    assert a.to_dict() == b.to_dict()


LAT = DyadicLattice(1.0, -0.5 - 0.5j)


def test_conformal_outside_identity():
    fam = SquareFamily.from_triples([(3, 0, 0), (3, 2, 0), (2, 2, 2)], 1.0, LAT)
    rep = run_conformal_outside_trial(fam, 0.0, 0, GRID)
    assert rep.ratio == pytest.approx(1.0, rel=1e-12)
    assert rep.preconditions_ok


def test_conformal_outside_flags_preconditions():
    fam = SquareFamily.from_triples([(3, 0, 0), (3, 1, 0)], 1.0, LAT)
    rep = run_conformal_outside_trial(fam, 0.3, 0, GRID, tau_max=1.0)
    assert not rep.preconditions_ok and rep.notes


def test_sparser_family_keeps_image_packing():
    dense = SquareFamily.from_triples([(3, 0, 0), (3, 2, 0)], 1.0, LAT)
    sparse = SquareFamily.from_triples([(4, 0, 0), (4, 4, 0)], 1.0, LAT)
    assert packing_alpha(sparse) == packing_alpha(dense) / 2
    for seed in range(3):
        a = run_conformal_outside_trial(dense, 0.5, seed, GRID)
        b = run_conformal_outside_trial(sparse, 0.5, seed, GRID)
        assert b.image_alpha <= a.image_alpha * 1.2


def test_conformal_outside_ratio_uniform():
    fam = SquareFamily.from_triples([(3, 0, 0), (3, 2, 0), (2, 2, 2), (3, 1, 5)], 1.0, LAT)
    ratios = [run_conformal_outside_trial(fam, 0.5, s, GRID).ratio for s in range(20)]
    assert max(ratios) <= 5 * float(np.median(ratios))
