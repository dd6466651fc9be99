"""Distortion sums for disks centered on the real line and for packed families.

A trial draws a random antisymmetric dilatation avoiding the disks, solves the
principal map once, and evaluates the sums for any number of exponents ``t``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .beltrami_solver import (
    BeltramiCoefficient,
    PrincipalMapSolution,
    Symmetry,
    derivatives_on_disks,
    random_dilatation,
    solve_principal,
)
from .dyadic_geometry import (
    QuasisquareFamily,
    SquareFamily,
    packing_alpha,
    packing_alpha_quasi,
    sampled_diameter,
    smoothness_tau,
)
from .errors import DomainError, LayoutError
from .field_core import GridSpec
from .regions import Disk, Region, Square

SMIRNOV_CONSTANT = 8.0
DEFAULT_EPS = 0.1


@dataclass(frozen=True)
class ExponentPair:
    t: float
    k: float

    @property
    def t_of_k(self) -> float:
        return exponent_t_of_k(self.t, self.k)


def exponent_t_of_k(t: float, k: float) -> float:
    """Solve ``1/t(k) - 1/2 = (1-k^2)/(1+k^2) (1/t - 1/2)`` for ``t(k)``."""
    if not 0 < t <= 2:
        raise DomainError(f"t must lie in (0, 2], got {t}")
    if not 0 <= k < 1:
        raise DomainError(f"k must lie in [0, 1), got {k}")
    if t == 2:
        return 2.0
    if k == 0:
        return float(t)
    p, m = 1 + k * k, 1 - k * k
    return 2 * t * p / (t * p + (2 - t) * m)


@dataclass(frozen=True)
class DiskOnLine:
    center: float
    radius: float

    def __post_init__(self):
        if isinstance(self.center, complex):
            if self.center.imag != 0:
                raise LayoutError("disk centers must lie on the real axis")
            object.__setattr__(self, "center", self.center.real)
        if not self.radius > 0:
            raise LayoutError("disk radius must be positive")

    def as_disk(self) -> Disk:
        return Disk(complex(self.center), self.radius)


def validate_layout(disks, ambient: DiskOnLine = DiskOnLine(0.0, 1.0)):
    ordered = sorted(disks, key=lambda d: d.center)
    for d in ordered:
        if abs(d.center - ambient.center) + d.radius > ambient.radius * (1 + 1e-12):
            raise LayoutError(f"disk {d} leaves the ambient disk")
    for a, b in zip(ordered, ordered[1:]):
        if b.center - a.center < a.radius + b.radius:
            raise LayoutError(f"disks {a} and {b} overlap")
    return ordered


def random_layout(rng: np.random.Generator, n_max: int = 64, extent: float = 0.98) -> list:
    """Between 1 and ``n_max`` disjoint disks on ``[-extent, extent]`` with random radii and gaps."""
    n = int(rng.integers(1, n_max + 1))
    radii = rng.uniform(0.5, 1.0, n)
    gaps = rng.uniform(0.05, 0.3, n + 1)
    scale = 2 * extent / (2 * radii.sum() + gaps.sum())
    radii, gaps = radii * scale, gaps * scale
    x = -extent + gaps[0]
    out = []
    for r, g in zip(radii, gaps[1:]):
        out.append(DiskOnLine(x + r, r))
        x += 2 * r + g
    return out


def nested_layout(level: int, radius: float = 1.0, fill: float = 0.5, center: float = 0.0) -> list:
    """``2**level`` equal disks spread evenly along the diameter of ``B(center, radius)``."""
    n = 2**level
    step = 2 * radius / n
    return [DiskOnLine(center - radius + (2 * i + 1) * step / 2, fill * step / 2) for i in range(n)]


def antisymmetric_avoiding(
    spec: GridSpec,
    k: float,
    seed,
    disks,
    support: Region | None = None,
    margin: float | None = None,
    cells=(0.125,),
) -> BeltramiCoefficient:
    support = Region((Disk(0j, 1.0),)) if support is None else support
    margin = 2 * spec.h if margin is None else margin
    exclude = Region(tuple(d.as_disk() for d in disks))
    return random_dilatation(spec, k, seed, support, exclude, margin, cells, Symmetry.ANTISYMMETRIC)


# ---------------------------------------------------------------------------
# Smirnov-type sums
# ---------------------------------------------------------------------------


@dataclass
class SmirnovReport:
    k: float
    t: float
    t_of_k: float
    centers: list
    radii: list
    derivatives: list
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    eps: float = DEFAULT_EPS
    seed: int | None = None
    solver: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def smirnov_sums(k: float, t: float, radii, derivatives) -> tuple[float, float]:
    """``(sum (|f'| r)^t(k))^(1/t(k))`` and ``8 (sum r^t)^((1-k^2)/(1+k^2)/t)``."""
    tk = exponent_t_of_k(t, k)
    r = np.asarray(radii, dtype=float)
    d = np.abs(np.asarray(derivatives))
    lhs = math.fsum((d * r) ** tk) ** (1 / tk)
    rhs = SMIRNOV_CONSTANT * math.fsum(r**t) ** ((1 - k * k) / (1 + k * k) / t)
    return lhs, rhs


def _solver_meta(sol: PrincipalMapSolution) -> dict:
    return {
        "half_width": sol.spec.L,
        "resolution": sol.spec.N,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "planar": sol.planar,
    }


def smirnov_reports(
    sol: PrincipalMapSolution, disks, k: float, ts, eps: float = DEFAULT_EPS, seed=None, m: int = 16
) -> list:
    """Reports for every ``t`` from one solved map conformal on the disks."""
    centers = [complex(d.center) for d in disks]
    radii = [d.radius for d in disks]
    derivs = derivatives_on_disks(sol, centers, radii, m)
    out = []
    for t in ts:
        lhs, rhs = smirnov_sums(k, t, radii, derivs)
        ratio = lhs / rhs
        out.append(
            SmirnovReport(
                k=k,
                t=t,
                t_of_k=exponent_t_of_k(t, k),
                centers=[d.center for d in disks],
                radii=radii,
                derivatives=[float(abs(v)) for v in derivs],
                lhs=lhs,
                rhs=rhs,
                ratio=ratio,
                passed=bool(ratio <= 1 + eps),
                eps=eps,
                seed=seed,
                solver=_solver_meta(sol),
            )
        )
    return out


def run_smirnov_batch(k: float, ts, seed: int, spec: GridSpec, n_max: int = 64, eps: float = DEFAULT_EPS,
                      disks=None, tol: float = 1e-8) -> list:
    """Random layout and antisymmetric dilatation from ``seed``; one solve shared by all ``t``."""
    if disks is None:
        disks = random_layout(np.random.default_rng([seed, 0]), n_max)
    disks = validate_layout(disks)
    mu = antisymmetric_avoiding(spec, k, [seed, 1], disks)
    sol = solve_principal(mu, tol=tol)
    return smirnov_reports(sol, disks, k, ts, eps, seed)


def run_smirnov_trial(k: float, t: float, disks, seed: int, spec: GridSpec, eps: float = DEFAULT_EPS) -> SmirnovReport:
    return run_smirnov_batch(k, [t], seed, spec, eps=eps, disks=disks)[0]


# ---------------------------------------------------------------------------
# Diameter ratio for disks on a line
# ---------------------------------------------------------------------------


@dataclass
class CorollaryReport:
    k: float
    ambient: tuple
    centers: list
    radii: list
    image_diameters: list
    ambient_image_diameter: float
    ratio: float
    seed: int | None = None
    level: int | None = None
    solver: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def corollary_ratio(k, diam_images, diam_disks, diam_ball, diam_ball_image) -> float:
    p, m = 1 + k * k, 1 - k * k
    num = math.fsum(np.asarray(diam_images) ** p)
    den = (math.fsum(diam_disks) / diam_ball) ** m * diam_ball_image**p
    return num / den


def corollary_report(sol, disks, k, ambient: DiskOnLine, samples: int = 64, seed=None, level=None) -> CorollaryReport:
    images = [sampled_diameter(sol(d.as_disk().boundary(samples))) for d in disks]
    big = sampled_diameter(sol(ambient.as_disk().boundary(samples)))
    ratio = corollary_ratio(k, images, [2 * d.radius for d in disks], 2 * ambient.radius, big)
    return CorollaryReport(
        k=k,
        ambient=(ambient.center, ambient.radius),
        centers=[d.center for d in disks],
        radii=[d.radius for d in disks],
        image_diameters=images,
        ambient_image_diameter=big,
        ratio=ratio,
        seed=seed,
        level=level,
        solver=_solver_meta(sol),
    )


def run_corollary_trial(k: float, disks, seed: int, spec: GridSpec, ambient=DiskOnLine(0.0, 1.0),
                        support_radius: float = 1.5, samples: int = 64, level=None) -> CorollaryReport:
    """Antisymmetric dilatation on ``B(0, support_radius)`` minus the disks."""
    disks = validate_layout(disks, ambient)
    mu = antisymmetric_avoiding(spec, k, [seed, 1], disks, Region((Disk(0j, support_radius),)))
    sol = solve_principal(mu)
    return corollary_report(sol, disks, k, ambient, samples, seed, level)


# ---------------------------------------------------------------------------
# Maps conformal outside a packed family
# ---------------------------------------------------------------------------


@dataclass
class ConformalOutsideReport:
    k: float
    t: float
    tau: float
    alpha: float
    image_alpha: float
    ratio: float
    preconditions_ok: bool
    seed: int | None = None
    notes: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def dilatation_on_family(spec: GridSpec, k: float, seed, family: SquareFamily, cells=(0.0625,)) -> BeltramiCoefficient:
    region = Region(tuple(Square(q.corner.real, q.corner.imag, q.side) for q in family.members))
    return random_dilatation(spec, k, seed, region, None, 0.0, cells, Symmetry.NONE)


def run_conformal_outside_trial(
    family: SquareFamily,
    k: float,
    seed: int,
    spec: GridSpec,
    t: float | None = None,
    tau_max: float | None = None,
    alpha_max: float | None = None,
    samples: int = 64,
) -> ConformalOutsideReport:
    """Sum of image diameters against base diameters for a map conformal off the family."""
    t = family.t if t is None else t
    tau = smoothness_tau(family)
    alpha = packing_alpha(family, t) if len(family) > 1 else 0.0
    notes = []
    if tau_max is not None and tau > tau_max:
        notes.append(f"family is only {tau}-smooth")
    if alpha_max is not None and alpha > alpha_max:
        notes.append(f"family is only {alpha}-packed")
    mu = dilatation_on_family(spec, k, [seed, 1], family)
    sol = solve_principal(mu)
    qf = QuasisquareFamily(family, sol, samples)
    img = [qf.diameter(q) for q in family.members]
    base = [math.sqrt(2) * q.side for q in family.members]
    ratio = math.fsum(np.asarray(img) ** t) / math.fsum(np.asarray(base) ** t)
    img_alpha = packing_alpha_quasi(qf, t) if len(family) > 1 else 0.0
    return ConformalOutsideReport(
        k=k, t=t, tau=tau, alpha=alpha, image_alpha=img_alpha, ratio=ratio,
        preconditions_ok=not notes, seed=seed, notes=notes, solver=_solver_meta(sol),
    )
