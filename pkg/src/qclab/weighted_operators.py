"""Weighted L^2 norms for packing weights and empirical Beurling-transform bounds.

The weight ``omega = sum_P l(P)^(t-2) chi_P`` is sampled with half-open square
membership, so squares whose corners are lattice samples are represented
exactly.  ``maximal_operator`` and ``nonlocal_majorant`` are diagnostics for the
local/nonlocal splitting of the transform.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dyadic_geometry import (
    DyadicLattice,
    DyadicSquare,
    PackingWeight,
    SquareFamily,
    common_ancestor,
    packing_alpha,
    smoothness_tau,
)
from .errors import ConfigurationError, DomainError, ResolutionError
from .field_core import ComplexField, GridSpec, planar_beurling_transform

MIN_SAMPLES_PER_SIDE = 8


def check_resolution(family: SquareFamily, spec: GridSpec):
    if len(family) == 0:
        return
    finest = min(q.side for q in family.members)
    if finest < MIN_SAMPLES_PER_SIDE * spec.h * (1 - 1e-12):
        raise ResolutionError(
            f"finest square has side {finest:.4g} < {MIN_SAMPLES_PER_SIDE} grid spacings ({spec.h:.4g})"
        )
    lim = 0.5 * spec.L * (1 + 1e-12)
    for q in family.members:
        c = q.corner
        if min(c.real, c.imag) < -lim or max(c.real, c.imag) + q.side > lim:
            raise ConfigurationError(f"square {q} leaves the guard band")


def _index_range(lo: float, side: float, spec: GridSpec) -> tuple[int, int]:
    """Sample indices ``a <= i < b`` with ``lo <= x_i < lo + side``."""
    a = math.ceil((lo + spec.L) / spec.h - 1e-9)
    b = math.ceil((lo + side + spec.L) / spec.h - 1e-9)
    return max(a, 0), min(b, spec.N)


def square_mask(q: DyadicSquare, spec: GridSpec) -> tuple[slice, slice]:
    c = q.corner
    a0, a1 = _index_range(c.real, q.side, spec)
    b0, b1 = _index_range(c.imag, q.side, spec)
    return slice(a0, a1), slice(b0, b1)


def support_indicator(family: SquareFamily, spec: GridSpec) -> np.ndarray:
    out = np.zeros((spec.N, spec.N), dtype=bool)
    for q in family.members:
        out[square_mask(q, spec)] = True
    return out


def weighted_norm(f: ComplexField, w: PackingWeight) -> float:
    """``(int |f|^2 omega dm)^(1/2)`` by the lattice sum ``h^2 sum |f|^2 omega``."""
    spec = f.spec
    check_resolution(w.family, spec)
    omega = w.sample(spec)
    return float(spec.h * math.sqrt(np.sum(np.abs(f.samples) ** 2 * omega)))


class _Prefix:
    """Summed-area table for box sums of a real array."""

    def __init__(self, values: np.ndarray):
        self.table = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
        self.table[1:, 1:] = values.cumsum(0).cumsum(1)

    def box(self, si: slice, sj: slice) -> float:
        t = self.table
        return float(t[si.stop, sj.stop] - t[si.start, sj.stop] - t[si.stop, sj.start] + t[si.start, sj.start])


def _root_of(family: SquareFamily) -> DyadicSquare:
    members = family.members
    root = members[0]
    for q in members[1:]:
        nxt = common_ancestor(root, q)
        if nxt is None:
            raise DomainError("family does not lie in a single dyadic square")
        root = nxt
    return root


def maximal_operator(f: ComplexField, w: PackingWeight, x: complex) -> float:
    """``sup l(Q)^-t int_Q |f| omega`` over dyadic ``Q`` containing ``x``.

    ``Q`` runs from the smallest dyadic square holding the whole family down to
    the finest generation whose side is at least one grid spacing.
    """
    spec = f.spec
    check_resolution(w.family, spec)
    fam = w.family
    root = _root_of(fam)
    lat = fam.lattice
    prefix = _Prefix(np.abs(f.samples) * w.sample(spec) * spec.h**2)
    finest = root.generation + max(0, int(math.floor(math.log2(root.side / spec.h) + 1e-9)))
    best = 0.0
    for g in range(root.generation, finest + 1):
        side = math.ldexp(lat.root_side, -g)
        i = math.floor((x.real - lat.origin.real) / side)
        j = math.floor((x.imag - lat.origin.imag) / side)
        q = DyadicSquare(g, i, j, lat)
        if not root.contains(q):
            continue
        val = prefix.box(*square_mask(q, spec)) / side**w.t
        best = max(best, val)
    return best


def square_distance(p: DyadicSquare, q: DyadicSquare) -> float:
    """Euclidean distance between closed dyadic squares from integer coordinates."""
    if p.lattice != q.lattice:
        raise ConfigurationError("squares live on different lattices")
    G = max(p.generation, q.generation)
    sp, sq = 1 << (G - p.generation), 1 << (G - q.generation)
    px0, py0 = p.i * sp, p.j * sp
    qx0, qy0 = q.i * sq, q.j * sq
    dx = max(0, qx0 - (px0 + sp), px0 - (qx0 + sq))
    dy = max(0, qy0 - (py0 + sp), py0 - (qy0 + sq))
    unit = math.ldexp(p.lattice.root_side, -G)
    return unit * math.hypot(dx, dy)


def separation(p: DyadicSquare, q: DyadicSquare) -> float:
    """``D(P, Q) = dist(P, Q) + l(P) + l(Q)``."""
    return square_distance(p, q) + p.side + q.side


def nonlocal_majorant(f: ComplexField, family: SquareFamily, P: DyadicSquare) -> float:
    """``sum_{Q != P} D(P, Q)^-2 int_Q |f| dm``."""
    if P not in set(family.members):
        raise DomainError(f"square {P} is not a member of the family")
    spec = f.spec
    prefix = _Prefix(np.abs(f.samples) * spec.h**2)
    terms = [prefix.box(*square_mask(q, spec)) / separation(P, q) ** 2 for q in family.members if q != P]
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Operator-norm estimates
# ---------------------------------------------------------------------------


@dataclass
class WeightedNormReport:
    family: str
    t: float
    tau: float
    alpha: float
    trials: int
    estimate: float
    ratios: list
    labels: list
    level: int | None = None
    seed: int | None = None
    construction: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def transform_ratio(coeffs_field: np.ndarray, w: PackingWeight, spec: GridSpec, omega=None, support=None) -> float:
    """``||S(f chi_P)||_omega / ||f||_omega`` for samples ``coeffs_field`` on ``P``."""
    if omega is None:
        omega = w.sample(spec)
    if support is None:
        support = omega > 0
    f = ComplexField(spec, np.where(support, coeffs_field, 0))
    Sf = planar_beurling_transform(f, where=support)
    num = np.sum(np.abs(Sf.samples[support]) ** 2 * omega[support])
    den = np.sum(np.abs(f.samples[support]) ** 2 * omega[support])
    if den == 0:
        return 0.0
    return float(math.sqrt(num / den))


def _piecewise(family: SquareFamily, spec: GridSpec, coeffs) -> np.ndarray:
    out = np.zeros((spec.N, spec.N), dtype=complex)
    for q, c in zip(family.members, coeffs):
        out[square_mask(q, spec)] = c
    return out


def estimate_operator_norm(
    w: PackingWeight,
    spec: GridSpec,
    trials: int = 16,
    seed: int = 0,
    spikes: int = 4,
    level: int | None = None,
    construction: dict | None = None,
) -> WeightedNormReport:
    """Largest observed ratio over structured and random inputs supported on the family.

    Adversarial inputs: constant, alternating sign by member order, and single-square
    spikes on the largest and smallest members.  Random trial ``n`` draws complex
    Gaussian coefficients per square plus a per-sample perturbation, from
    ``default_rng([seed, n])``.
    """
    if trials < 1:
        raise ConfigurationError("at least one trial is required")
    fam = w.family
    check_resolution(fam, spec)
    omega = w.sample(spec)
    support = omega > 0
    n = len(fam)
    inputs, labels = [], []
    inputs.append(_piecewise(fam, spec, np.ones(n)))
    labels.append("constant")
    if n > 1:
        inputs.append(_piecewise(fam, spec, (-1.0) ** np.arange(n)))
        labels.append("alternating")
    order = sorted(range(n), key=lambda m: (fam.members[m].side, m))
    picks = list(dict.fromkeys(order[: spikes // 2] + order[::-1][: spikes - spikes // 2]))
    for m in picks:
        e = np.zeros(n)
        e[m] = 1.0
        inputs.append(_piecewise(fam, spec, e))
        labels.append(f"spike:{fam.members[m]}")
    for t_idx in range(trials):
        rng = np.random.default_rng([seed, t_idx])
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        noise = rng.standard_normal((spec.N, spec.N)) + 1j * rng.standard_normal((spec.N, spec.N))
        inputs.append(_piecewise(fam, spec, c) + 0.25 * noise)
        labels.append(f"random:{t_idx}")
    ratios = [transform_ratio(v, w, spec, omega, support) for v in inputs]
    return WeightedNormReport(
        family=fam.to_text(),
        t=fam.t,
        tau=smoothness_tau(fam),
        alpha=packing_alpha(fam) if n > 1 else 0.0,
        trials=trials,
        estimate=max(ratios),
        ratios=ratios,
        labels=labels,
        level=level,
        seed=seed,
        construction=construction or {},
    )


# ---------------------------------------------------------------------------
# Self-similar packed construction
# ---------------------------------------------------------------------------

REFINEMENT_LATTICE = DyadicLattice(1.0, -0.5 - 0.5j)


def refinement_family(level: int, t: float = 1.5, lattice: DyadicLattice = REFINEMENT_LATTICE) -> SquareFamily:
    """Branching construction on the unit root square.

    At every node the lower-left child is a member and the upper-left and
    upper-right children are refined further; at ``level`` the refined children
    become members.  Sides range from 1/2 to ``2**-level`` and the packing
    constant converges as the level grows.
    """
    if level < 1:
        raise DomainError("level must be at least 1")
    members = []

    def grow(q: DyadicSquare):
        c00, c10, c01, c11 = q.children()
        members.append(c00)
        for c in (c01, c11):
            if c.generation == level:
                members.append(c)
            else:
                grow(c)

    grow(DyadicSquare(0, 0, 0, lattice))
    return SquareFamily(tuple(members), t, lattice)


def refinement_spec(levels=(3, 4, 5, 6)) -> GridSpec:
    """Smallest power-of-two grid on ``[-1, 1)^2`` resolving the finest level with 8 samples."""
    finest = max(levels)
    n = 2 * MIN_SAMPLES_PER_SIDE * 2**finest
    return GridSpec(1.0, max(n, 64))


def refinement_trend(levels=(3, 4, 5, 6), t: float = 1.5, trials: int = 16, seed: int = 0, spec=None):
    """Operator-norm estimates along the refinement levels and their max/min spread."""
    spec = refinement_spec(levels) if spec is None else spec
    reports = []
    for lev in levels:
        fam = refinement_family(lev, t)
        reports.append(
            estimate_operator_norm(
                PackingWeight(fam), spec, trials, seed, level=lev,
                construction={"kind": "branching", "t": t, "level": lev, "members": len(fam)},
            )
        )
    est = [r.estimate for r in reports]
    return reports, max(est) / min(est)
