"""Superlevel sets of Riemann-map derivatives and area distortion on the unit disk.

The extremal example is ``phi(z) = ((1+z)/2)^(1-k)``, whose derivative blows up
only at ``z = -1``.  Quadrature is graded in polar coordinates about that point,
``z = -1 + s e^(i theta)`` with ``|theta| < pi/2`` and ``s < 2 cos(theta)``, so
sets ``{|1+z| < c}`` are resolved for ``c`` over many decades.  Samplers that
expose ``abs_derivative_at_offset(u)`` receive ``u = z + 1`` directly and avoid
the cancellation in ``1 + z``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .beltrami_solver import PrincipalMapSolution, Symmetry, random_dilatation, solve_principal
from .errors import ConfigurationError, DomainError, RefineGridError, ResolutionError
from .field_core import GridSpec
from .regions import Disk, Region

FOCUS = -1.0 + 0j


def lens_area(c: float) -> float:
    """``|D ∩ B(-1, c)|`` in closed form."""
    if c <= 0:
        return 0.0
    if c >= 2:
        return math.pi
    x = c / 2
    if x < 0.05:
        g = 4 * x**3 / 3 + 2 * x**5 / 5 + 3 * x**7 / 14 + 5 * x**9 / 36 + 35 * x**11 / 352
    else:
        g = 2 * math.asin(x) - 2 * x * math.sqrt(1 - x * x)
    return c * c * math.acos(x) + g


@dataclass(frozen=True)
class PowerMap:
    """``phi(z) = ((1+z)/2)^(1-k)`` on the unit disk."""

    k: float
    extends_continuously = True

    def __post_init__(self):
        if not 0 < self.k < 1:
            raise DomainError(f"k must lie in (0, 1), got {self.k}")

    def __call__(self, z):
        return ((1 + np.asarray(z, dtype=complex)) / 2) ** (1 - self.k)

    def derivative(self, z):
        return (1 - self.k) / 2 * ((1 + np.asarray(z, dtype=complex)) / 2) ** (-self.k)

    def abs_derivative_at_offset(self, u):
        return (1 - self.k) / 2 * (np.abs(u) / 2) ** (-self.k)

    def abs_derivative(self, z):
        return self.abs_derivative_at_offset(1 + np.asarray(z, dtype=complex))

    @property
    def derivative_at_zero(self) -> float:
        return (1 - self.k) * 2.0 ** (self.k - 1)

    def superlevel_radius(self, rho):
        """``c`` with ``{|phi'| > rho} = D ∩ B(-1, c)``."""
        return 2 * ((1 - self.k) / (2 * np.asarray(rho, dtype=float))) ** (1 / self.k)

    def superlevel_area(self, rho) -> np.ndarray:
        c = np.atleast_1d(self.superlevel_radius(rho))
        return np.array([lens_area(v) for v in c]).reshape(np.shape(rho))

    def rho_for_radius(self, c: float) -> float:
        return (1 - self.k) / 2 * (2 / c) ** self.k

    def weak_constant(self) -> float:
        """``lim rho^(2/k) |{|phi'| > rho}| = 2 pi ((1-k)/2)^(2/k)`` as ``rho -> inf``."""
        return 2 * math.pi * ((1 - self.k) / 2) ** (2 / self.k)


@dataclass(frozen=True)
class Identity:
    extends_continuously = True

    def __call__(self, z):
        return np.asarray(z, dtype=complex)

    def abs_derivative(self, z):
        return np.ones(np.shape(z))

    derivative_at_zero = 1.0


@dataclass(frozen=True)
class Scaled:
    """``c * phi`` for a sampler ``phi``."""

    base: object
    c: complex

    @property
    def extends_continuously(self):
        return getattr(self.base, "extends_continuously", False)

    def __call__(self, z):
        return self.c * self.base(z)

    def abs_derivative(self, z):
        return abs(self.c) * _abs_derivative(self.base, np.asarray(z), None)

    def abs_derivative_at_offset(self, u):
        return abs(self.c) * _abs_derivative(self.base, FOCUS + np.asarray(u), np.asarray(u))

    @property
    def derivative_at_zero(self):
        return abs(self.c) * _derivative_at_zero(self.base)


def _abs_derivative(sampler, z, u):
    if u is not None and hasattr(sampler, "abs_derivative_at_offset"):
        return np.asarray(sampler.abs_derivative_at_offset(u), dtype=float)
    if hasattr(sampler, "abs_derivative"):
        return np.asarray(sampler.abs_derivative(z), dtype=float)
    return np.abs(np.asarray(sampler(z)))


def _derivative_at_zero(sampler) -> float:
    if hasattr(sampler, "derivative_at_zero"):
        return float(sampler.derivative_at_zero)
    return float(_abs_derivative(sampler, np.array([0j]), np.array([1 + 0j]))[0])


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cap:
    """``D ∩ B(-1, delta)``."""

    delta: float

    @property
    def area(self) -> float:
        return lens_area(self.delta)


@dataclass(frozen=True)
class PolarQuadrature:
    """Midpoint rule in ``(log s, theta)`` about ``-1`` on ``D ∩ B(-1, s_max)``.

    Each angular sector is clipped at ``s = 2 cos(theta_mid)``; the core
    ``s < s_min`` is lumped into one node with its exact area.
    """

    n_radial: int = 4096
    n_angular: int = 1152
    s_min: float = 1e-6
    s_max: float = 2.0
    chunk: int = 128

    def __post_init__(self):
        if not 0 < self.s_min < self.s_max:
            raise ConfigurationError("need 0 < s_min < s_max")

    @property
    def size(self) -> int:
        """Number of nodes actually inside the region (core node included)."""
        edges = np.geomspace(self.s_min, self.s_max, self.n_radial + 1)
        dth = math.pi / self.n_angular
        theta = -math.pi / 2 + dth * (np.arange(self.n_angular) + 0.5)
        cap = np.minimum(2 * np.cos(theta), self.s_max)
        return 1 + int(np.searchsorted(edges[:-1], cap, side="left").sum())

    def chunks(self):
        edges = np.geomspace(self.s_min, self.s_max, self.n_radial + 1)
        dth = math.pi / self.n_angular
        theta = -math.pi / 2 + dth * (np.arange(self.n_angular) + 0.5)
        core = lens_area(self.s_min)
        yield np.array([FOCUS + self.s_min / 2]), np.array([self.s_min / 2 + 0j]), np.array([core])
        lo, hi = edges[:-1], edges[1:]
        for a in range(0, self.n_angular, self.chunk):
            th = theta[a : a + self.chunk, None]
            cap = np.minimum(2 * np.cos(th), self.s_max)
            top = np.minimum(hi[None, :], cap)
            keep = top > lo[None, :]
            s_lo = np.broadcast_to(lo[None, :], top.shape)[keep]
            s_hi = top[keep]
            w = 0.5 * (s_hi**2 - s_lo**2) * dth
            s = np.sqrt(s_lo * s_hi)
            u = s * np.exp(1j * np.broadcast_to(th, top.shape)[keep])
            yield FOCUS + u, u, w


@dataclass(frozen=True)
class DiskQuadrature:
    """Cartesian midpoint rule on ``B(center, radius) ∩ D`` with ``n x n`` cells on the bounding box."""

    center: complex = 0j
    radius: float = 1.0
    n: int = 2048
    chunk: int = 256

    @property
    def size(self) -> int:
        """Approximate node count (cells of the bounding box inside the disk)."""
        return int(math.pi / 4 * self.n * self.n)

    def chunks(self):
        c = complex(self.center)
        d = 2 * self.radius / self.n
        ax = -self.radius + d * (np.arange(self.n) + 0.5)
        for a in range(0, self.n, self.chunk):
            z = (c.real + ax[a : a + self.chunk, None]) + 1j * (c.imag + ax[None, :])
            keep = (np.abs(z - c) < self.radius) & (np.abs(z) < 1)
            zz = z[keep]
            yield zz, zz - FOCUS, np.full(zz.shape, d * d)


def quadrature_for(region, n_radial=4096, n_angular=1152, n_cart=2048, s_min=None):
    if isinstance(region, Cap):
        smin = region.delta * 1e-6 if s_min is None else s_min
        return PolarQuadrature(n_radial, n_angular, smin, region.delta)
    if isinstance(region, Disk):
        return DiskQuadrature(region.center, region.radius, n_cart)
    if region is None:
        return PolarQuadrature(n_radial, n_angular, 1e-6 if s_min is None else s_min, 2.0)
    raise ConfigurationError(f"unsupported region {region!r}")


def _is_empty(region) -> bool:
    return (isinstance(region, Cap) and region.delta <= 0) or (isinstance(region, Disk) and region.radius <= 0) \
        or (isinstance(region, Region) and not region.parts)


# ---------------------------------------------------------------------------
# Tails
# ---------------------------------------------------------------------------


@dataclass
class TailStatistics:
    k: float
    rhos: list
    measures: list
    scaled: list
    slope: float
    stderr: float
    sup_scaled: float
    total_area: float
    fit_window: tuple
    degenerate: bool = False
    derivative_at_zero: float | None = None
    nodes: int = 0

    def to_dict(self):
        return asdict(self)

    @property
    def normalized_constant(self) -> float:
        """``sup rho^(2/k) |{|phi'| > rho}| / |phi'(0)|^(2/k)``."""
        return self.sup_scaled / self.derivative_at_zero ** (2 / self.k)


def _measures(sampler, quad, rhos) -> tuple[np.ndarray, float, float]:
    """Superlevel measures at ``rhos`` plus total area and ``int |phi'|^2``."""
    rhos = np.asarray(rhos, dtype=float)
    order = np.argsort(rhos)
    srt = rhos[order]
    bins = np.zeros(len(srt) + 1)
    area = []
    energy = []
    for z, u, w in quad.chunks():
        v = _abs_derivative(sampler, z, u)
        idx = np.searchsorted(srt, v, side="left")  # v > srt[idx-1]
        bins += np.bincount(idx, weights=w, minlength=len(srt) + 1)
        area.append(w.sum())
        energy.append(np.sum(w * v * v))
    # measure at srt[i] = total weight with v > srt[i] = weights in bins i+1..end
    tail = np.cumsum(bins[::-1])[::-1][1:]
    out = np.empty_like(tail)
    out[order] = tail
    return out, math.fsum(area), math.fsum(energy)


def default_rho_grid(k: float, c_start: float = 0.02, decades: float = 3.0, points: int = 61) -> np.ndarray:
    rho0 = PowerMap(k).rho_for_radius(c_start)
    return np.geomspace(rho0, rho0 * 10**decades, points)


def tail_statistics(
    sampler,
    k: float,
    rhos=None,
    quadrature=None,
    region=None,
    fit_window=None,
    min_nodes: int = 2048**2,
) -> TailStatistics:
    """Measures of ``{|phi'| > rho}`` by quadrature, scaled by ``rho^(2/k)``, and a log-log slope.

    ``fit_window`` is ``(lo, hi)`` on the measure relative to the total area; the
    slope uses grid points whose measure falls in it (default: all nonzero).
    """
    if not 0 < k < 1:
        raise DomainError(f"k must lie in (0, 1), got {k}")
    if rhos is None:
        rhos = default_rho_grid(k)
    rhos = np.asarray(rhos, dtype=float)
    if quadrature is None:
        if region is None:
            c_min = PowerMap(k).superlevel_radius(rhos.max()) if np.all(rhos > 0) else 1e-6
            quadrature = PolarQuadrature(s_min=min(1e-6, float(c_min) / 100))
        else:
            quadrature = quadrature_for(region)
    if quadrature.size < min_nodes:
        raise ResolutionError(f"quadrature has {quadrature.size} nodes, at least {min_nodes} required")
    meas, area, _ = _measures(sampler, quadrature, rhos)
    scaled = rhos ** (2 / k) * meas
    lo, hi = (0.0, 1.0) if fit_window is None else fit_window
    use = (meas > lo * area) & (meas <= hi * area) & (meas > 0)
    degenerate = int(use.sum()) < 3
    if degenerate:
        slope = stderr = float("nan")
    else:
        fit = stats.linregress(np.log(rhos[use]), np.log(meas[use]))
        slope, stderr = float(fit.slope), float(fit.stderr)
    return TailStatistics(
        k=k,
        rhos=rhos.tolist(),
        measures=meas.tolist(),
        scaled=scaled.tolist(),
        slope=slope,
        stderr=stderr,
        sup_scaled=float(scaled.max()),
        total_area=area,
        fit_window=(lo, hi),
        degenerate=bool(degenerate or not np.any(meas > 0)),
        derivative_at_zero=_derivative_at_zero(sampler),
        nodes=quadrature.size,
    )


# ---------------------------------------------------------------------------
# Area distortion and the layer-cake identity
# ---------------------------------------------------------------------------


@dataclass
class AreaDistortionReport:
    k: float
    region: dict
    region_area: float
    image_area: float
    coarse_image_area: float
    ratio: float
    boundary_flag: bool = False

    def to_dict(self):
        return asdict(self)


def _region_dict(region) -> dict:
    if isinstance(region, Cap):
        return {"kind": "cap", "delta": region.delta}
    if isinstance(region, Disk):
        return region.to_dict()
    return {"kind": "empty"}


def _half(quad):
    if isinstance(quad, PolarQuadrature):
        return PolarQuadrature(quad.n_radial // 2, quad.n_angular // 2, quad.s_min, quad.s_max, quad.chunk)
    return DiskQuadrature(quad.center, quad.radius, quad.n // 2, quad.chunk)


def _region_area(region, quad) -> float:
    if isinstance(region, Cap):
        return region.area
    return math.fsum(w.sum() for _, _, w in quad.chunks())


def area_distortion(sampler, region, k: float, quadrature=None, tolerance: float = 0.02) -> AreaDistortionReport:
    """``|phi(E)| / (|phi'(0)|^2 |E|^(1-k))`` with ``|phi(E)| = int_E |phi'|^2``.

    The integral is repeated at half resolution; disagreement beyond ``tolerance``
    raises :class:`ResolutionError`.
    """
    if _is_empty(region):
        return AreaDistortionReport(k, {"kind": "empty"}, 0.0, 0.0, 0.0, 0.0)
    quad = quadrature_for(region) if quadrature is None else quadrature
    _, _, fine = _measures(sampler, quad, [])
    _, _, coarse = _measures(sampler, _half(quad), [])
    if abs(fine - coarse) > tolerance * abs(fine):
        raise ResolutionError(f"image area changes by {abs(fine - coarse) / fine:.2%} between resolutions")
    area = _region_area(region, quad)
    d0 = _derivative_at_zero(sampler)
    touches = isinstance(region, Cap) or (
        isinstance(region, Disk) and abs(region.center) + region.radius > 1 - 4 * region.radius / quad.n
    )
    flag = touches and not getattr(sampler, "extends_continuously", False)
    return AreaDistortionReport(
        k=k, region=_region_dict(region), region_area=area, image_area=fine, coarse_image_area=coarse,
        ratio=fine / (d0 * d0 * area ** (1 - k)), boundary_flag=flag,
    )


@dataclass
class LayerCakeReport:
    direct: float
    layered: float
    discrepancy: float
    split_point: float
    below_split: float
    above_split: float
    thresholds: int
    region_area: float

    def to_dict(self):
        return asdict(self)


def layer_cake_consistency(sampler, region, k: float, n_thresholds: int = 4000, quadrature=None,
                           max_discrepancy: float = 0.10) -> LayerCakeReport:
    """Compare ``int_E |phi'|^2`` with ``2 int rho |{z in E: |phi'| > rho}| d rho``.

    Thresholds are 0 followed by a geometric grid from half the smallest to just
    above the largest sampled value; the integral is the trapezoid rule.  The
    split point ``T = |E|^(-k/2)`` is reported with the two partial integrals.
    """
    if _is_empty(region):
        return LayerCakeReport(0.0, 0.0, 0.0, float("inf"), 0.0, 0.0, 0, 0.0)
    quad = quadrature_for(region) if quadrature is None else quadrature
    vmin, vmax = math.inf, 0.0
    for z, u, w in quad.chunks():
        v = _abs_derivative(sampler, z, u)
        vmin, vmax = min(vmin, float(v.min())), max(vmax, float(v.max()))
    rhos = np.concatenate([[0.0], np.geomspace(vmin / 2, vmax * 1.001, n_thresholds)])
    meas, area, direct = _measures(sampler, quad, rhos)
    integrand = 2 * rhos * meas
    layered = float(np.trapezoid(integrand, rhos))
    T = area ** (-k / 2)
    below = rhos <= T
    cut = int(below.sum())
    lower = float(np.trapezoid(integrand[:cut], rhos[:cut])) if cut > 1 else 0.0
    disc = abs(layered - direct) / direct if direct else 0.0
    if disc > max_discrepancy:
        raise RefineGridError(f"layer-cake discrepancy {disc:.2%} exceeds {max_discrepancy:.0%}")
    return LayerCakeReport(direct, layered, disc, T, lower, layered - lower, n_thresholds, area)


# ---------------------------------------------------------------------------
# Tails of solved maps
# ---------------------------------------------------------------------------


@dataclass
class SolvedMapSampler:
    """``|f'|`` of a solved map from angular difference quotients at radius ``step``."""

    solution: PrincipalMapSolution
    step: float
    m: int = 8

    def abs_derivative(self, z):
        z = np.asarray(z, dtype=complex).ravel()
        e = np.exp(2j * np.pi * np.arange(self.m) / self.m)
        f0 = self.solution.evaluate(z, cubic=True)
        acc = np.zeros(z.shape, dtype=complex)
        for ej in e:
            acc += (self.solution.evaluate(z + self.step * ej, cubic=True) - f0) / (self.step * ej)
        return np.abs(acc / self.m)

    @property
    def derivative_at_zero(self):
        return float(self.abs_derivative(np.array([0j]))[0])


def solver_backed_riemann_tail(
    k: float,
    seed,
    spec: GridSpec = GridSpec(4.0, 1024),
    annulus=(1.1, 1.6),
    radius: float = 0.95,
    n: int = 2320,
    points: int = 241,
    cells=(0.125,),
    mu_scale: float = 1.0,
    min_nodes: int = 2048**2,
):
    """Tails of ``|f'|`` on ``B(0, radius)`` for a map conformal on the unit disk.

    ``f`` solves a Beltrami equation with a random dilatation of modulus ``k`` on
    the annulus.  The slope is fitted where the superlevel set covers at most half
    of the disk.  Returns ``(tails, solution)``.
    """
    support = Region((Disk(0j, annulus[1]),))
    exclude = Region((Disk(0j, annulus[0]),))
    mu = random_dilatation(spec, k * mu_scale, seed, support, exclude, 0.0, cells, Symmetry.NONE)
    sol = solve_principal(mu)
    sampler = SolvedMapSampler(sol, 2 * spec.h)
    quad = DiskQuadrature(0j, radius, n)
    vmax = 0.0
    for z, _, _ in quad.chunks():
        vmax = max(vmax, float(sampler.abs_derivative(z).max()))
    rhos = np.geomspace(vmax * 1e-3, vmax * 1.001, points)
    tails = tail_statistics(sampler, k, rhos, quad, fit_window=(0.0, 0.5), min_nodes=min_nodes)
    return tails, sol
