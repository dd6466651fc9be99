"""Beltrami coefficients, the principal solution by Neumann series, and factorizations.

A principal map is written ``f(z) = z + C h(z)`` where ``h = d_bar f`` solves
``h = mu + mu S h``.  The iteration is a contraction of ratio ``k`` in ``L^2``
because the discrete Beurling multiplier is unimodular.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import (
    ConfigurationError,
    ConformalityWarning,
    DegenerateJacobianError,
    DivergedError,
    InvalidBoundError,
    OutOfDomainError,
    OutOfRangeError,
)
from .field_core import (
    ComplexField,
    GridSpec,
    beurling_transform,
    cauchy_transform,
    planar_beurling_transform,
    planar_cauchy_transform,
)
from .regions import Disk, Region, region_from_dict

SOLUTION_FORMAT = "qclab-solution/1"


@dataclass(frozen=True)
class QcConstants:
    k: float

    def __post_init__(self):
        if not 0.0 <= self.k < 1.0:
            raise InvalidBoundError(f"k must lie in [0, 1), got {self.k}")

    @classmethod
    def from_K(cls, K: float) -> "QcConstants":
        if not K >= 1.0:
            raise InvalidBoundError(f"K must be >= 1, got {K}")
        return cls((K - 1.0) / (K + 1.0))

    @property
    def K(self) -> float:
        return (1.0 + self.k) / (1.0 - self.k)


class Symmetry(str, enum.Enum):
    NONE = "none"
    ANTISYMMETRIC = "antisymmetric"
    SYMMETRIC = "symmetric"


def _check_bound(k):
    if not (0.0 <= k < 1.0):
        raise InvalidBoundError(f"dilatation bound must lie in [0, 1), got {k}")


@dataclass(frozen=True, eq=False)
class BeltramiCoefficient:
    field: ComplexField
    k: float
    symmetry: Symmetry = Symmetry.NONE
    support: Region | None = None

    def __post_init__(self):
        _check_bound(self.k)
        object.__setattr__(self, "symmetry", Symmetry(self.symmetry))
        mu = self.field.samples
        sup = float(np.abs(mu).max()) if mu.size else 0.0
        if sup > self.k * (1 + 1e-12) + 1e-15:
            raise InvalidBoundError(f"sup|mu| = {sup:.6g} exceeds the bound k = {self.k}")
        if not self.field.is_compactly_supported(rtol=0.0):
            raise ConfigurationError("dilatation must vanish outside the guard band")
        if self.support is not None:
            outside = ~self.support.contains(self.field.z)
            if np.any(mu[outside] != 0):
                raise ConfigurationError("dilatation has samples outside its support descriptor")
        mirrored = mu[:, self.field.spec.mirror_index()]
        if self.symmetry is Symmetry.ANTISYMMETRIC and not np.array_equal(mu, -np.conj(mirrored)):
            raise ConfigurationError("samples are not antisymmetric under z -> conj(z)")
        if self.symmetry is Symmetry.SYMMETRIC and not np.array_equal(mu, np.conj(mirrored)):
            raise ConfigurationError("samples are not symmetric under z -> conj(z)")

    @property
    def spec(self) -> GridSpec:
        return self.field.spec

    @property
    def samples(self) -> np.ndarray:
        return self.field.samples

    def is_zero(self) -> bool:
        return not np.any(self.field.samples)

    @classmethod
    def zero(cls, spec: GridSpec, k: float = 0.0) -> "BeltramiCoefficient":
        return cls(ComplexField.zeros(spec), k, Symmetry.NONE)

    def to_dict(self):
        return {
            "k": self.k,
            "symmetry": self.symmetry.value,
            "support": None if self.support is None else self.support.to_dict(),
        }


def _clip(vals: np.ndarray, k: float) -> np.ndarray:
    mod = np.abs(vals)
    # values already within rounding of k are left alone so clipping is idempotent
    over = mod > k * (1 + 1e-12)
    scale = np.where(over, k / np.where(over, mod, 1.0), 1.0)
    return vals * scale


def _reflect(raw: ComplexField, k: float, sign: int) -> np.ndarray:
    spec = raw.spec
    n = spec.N
    mid = spec.real_axis_index
    src = _clip(np.asarray(raw.samples), k)
    out = np.zeros_like(src)
    out[:, mid + 1 :] = src[:, mid + 1 :]
    upper = src[:, mid + 1 :]
    # column j < mid mirrors column n - j > mid; column 0 (Im z = -L) stays zero.
    out[:, 1:mid] = sign * np.conj(upper[:, ::-1])[:, : mid - 1]
    assert out.shape == (n, n)
    return out


def make_antisymmetric(raw: ComplexField, k: float, support: Region | None = None) -> BeltramiCoefficient:
    """Keep ``raw`` above the real axis and set ``mu(z) = -conj(mu(conj z))`` below."""
    _check_bound(k)
    return BeltramiCoefficient(ComplexField(raw.spec, _reflect(raw, k, -1)), k, Symmetry.ANTISYMMETRIC, support)


def make_symmetric(raw: ComplexField, k: float, support: Region | None = None) -> BeltramiCoefficient:
    """Keep ``raw`` above the real axis and set ``mu(z) = conj(mu(conj z))`` below."""
    _check_bound(k)
    return BeltramiCoefficient(ComplexField(raw.spec, _reflect(raw, k, +1)), k, Symmetry.SYMMETRIC, support)


def radial_stretch_coefficient(spec: GridSpec, K: float = 2.0, radius: float = 1.0) -> BeltramiCoefficient:
    """``mu = k z/conj(z)`` on the disk, the dilatation of ``z |z|^(K-1)``."""
    k = QcConstants.from_K(K).k
    z = spec.z
    inside = np.abs(z) < radius
    safe = np.where(z == 0, 1.0, z)
    vals = np.where(inside & (z != 0), k * safe / np.conj(safe), 0.0)
    return BeltramiCoefficient(ComplexField(spec, vals), k, Symmetry.SYMMETRIC, Region((Disk(0j, radius),)))


def radial_stretch_map(z, K: float = 2.0, radius: float = 1.0):
    """Closed form of the principal map with the radial-stretch dilatation."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z) / radius
    return np.where(r < 1, z * r ** (K - 1.0), z)


def random_dilatation(
    spec: GridSpec,
    k: float,
    seed,
    support: Region,
    exclude: Region | None = None,
    margin: float = 0.0,
    cells=(0.125,),
    symmetry: Symmetry | str = Symmetry.ANTISYMMETRIC,
) -> BeltramiCoefficient:
    """Piecewise constant phases of modulus ``k`` on square cells.

    Each entry of ``cells`` is a cell side; the phase at a sample is the sum of the
    phases of the cells containing it, one per scale.  Samples in ``exclude``
    (grown by ``margin``) are zero.  For the antisymmetric and symmetric classes
    only the upper half-plane is drawn and the rest is reflected.
    """
    _check_bound(k)
    symmetry = Symmetry(symmetry)
    rng = np.random.default_rng(seed)
    z = spec.z
    theta = np.zeros(z.shape)
    lim = spec.half_width
    for side in cells:
        n_cells = int(math.ceil(2 * lim / side)) + 1
        table = rng.uniform(0.0, 2 * np.pi, size=(n_cells, n_cells))
        ci = np.clip(np.floor((z.real + lim) / side).astype(int), 0, n_cells - 1)
        cj = np.clip(np.floor((z.imag + lim) / side).astype(int), 0, n_cells - 1)
        theta += table[ci, cj]
    mask = support.contains(z)
    if exclude is not None:
        mask &= ~exclude.contains(z, margin)
    mask &= spec.guard_mask
    raw = ComplexField(spec, np.where(mask, k * np.exp(1j * theta), 0.0))
    if symmetry is Symmetry.ANTISYMMETRIC:
        return make_antisymmetric(raw, k, support)
    if symmetry is Symmetry.SYMMETRIC:
        return make_symmetric(raw, k, support)
    return BeltramiCoefficient(raw, k, Symmetry.NONE, support)


# ---------------------------------------------------------------------------
# Principal solution
# ---------------------------------------------------------------------------


class DerivativeEstimate(complex):
    """A complex derivative value carrying the conformality check of its disk."""

    conformal: bool = True
    max_dilatation: float = 0.0

    def __new__(cls, value, conformal=True, max_dilatation=0.0):
        obj = super().__new__(cls, value)
        obj.conformal = conformal
        obj.max_dilatation = max_dilatation
        return obj


@dataclass(frozen=True, eq=False)
class PrincipalMapSolution:
    coefficient: BeltramiCoefficient
    h_field: ComplexField
    displacement: ComplexField
    residual: float
    iterations: int
    residual_history: tuple = ()
    dz_field: ComplexField | None = None
    tol: float = 1e-8
    max_iter: int = 400
    planar: bool = True
    interpolation: str = "bilinear"

    @property
    def spec(self) -> GridSpec:
        return self.displacement.spec

    @property
    def k(self) -> float:
        return self.coefficient.k

    def with_interpolation(self, mode: str) -> "PrincipalMapSolution":
        if mode not in ("bilinear", "bicubic"):
            raise ConfigurationError(f"unknown interpolation {mode!r}")
        return replace(self, interpolation=mode)

    @property
    def convergence_ratios(self) -> np.ndarray:
        r = np.asarray(self.residual_history, dtype=float)
        if r.size < 2:
            return np.zeros(0)
        return r[1:] / r[:-1]

    @cached_property
    def decay_profile(self) -> tuple[float, float]:
        """Max and median of ``|z| |displacement|`` on the ring ``max(|x|,|y|) >= 0.8 L``."""
        z = self.spec.z
        ring = np.maximum(np.abs(z.real), np.abs(z.imag)) >= 0.8 * self.spec.L
        vals = np.abs(z[ring]) * np.abs(self.displacement.samples[ring])
        return float(vals.max()), float(np.median(vals))

    # -- interpolation -------------------------------------------------------

    @cached_property
    def _cubic_coeffs(self):
        d = self.displacement.samples
        return (
            ndimage.spline_filter(d.real, order=3, mode="mirror"),
            ndimage.spline_filter(d.imag, order=3, mode="mirror"),
        )

    def _check_domain(self, z):
        if not np.all(self.spec.contains(z)):
            raise OutOfDomainError("point(s) outside the sampled square [-L, L - h]^2")

    def _interp(self, arrays, z, order):
        fi, fj = self.spec.fractional_index(z)
        coords = np.vstack([np.ravel(fi), np.ravel(fj)])
        if order == 1:
            re = ndimage.map_coordinates(arrays.real, coords, order=1, mode="nearest")
            im = ndimage.map_coordinates(arrays.imag, coords, order=1, mode="nearest")
        else:
            cre, cim = arrays
            re = ndimage.map_coordinates(cre, coords, order=3, mode="mirror", prefilter=False)
            im = ndimage.map_coordinates(cim, coords, order=3, mode="mirror", prefilter=False)
        return (re + 1j * im).reshape(np.shape(z))

    def displacement_at(self, z, cubic: bool | None = None):
        z = np.asarray(z, dtype=complex)
        self._check_domain(z)
        if cubic is None:
            cubic = self.interpolation == "bicubic"
        if cubic:
            return self._interp(self._cubic_coeffs, z, 3)
        return self._interp(self.displacement.samples, z, 1)

    def evaluate(self, z, cubic: bool | None = None):
        """``z + displacement(z)`` by bilinear (default) or bicubic interpolation."""
        zz = np.asarray(z, dtype=complex)
        out = zz + self.displacement_at(zz, cubic)
        return complex(out) if out.ndim == 0 else out

    __call__ = evaluate

    def jacobian_at(self, z):
        """Interpolated ``(d_z f, d_bar f)`` at ``z`` (bilinear)."""
        zz = np.asarray(z, dtype=complex)
        a = self._interp(self.dz_field.samples, zz, 1)
        b = self._interp(self.h_field.samples, zz, 1)
        return a, b

    @cached_property
    def _image_tree(self):
        img = (self.spec.z + self.displacement.samples).ravel()
        return cKDTree(np.column_stack([img.real, img.imag]))

    def to_dict(self):
        mx, med = self.decay_profile
        return {
            "grid": {"half_width": self.spec.L, "resolution": self.spec.N},
            "coefficient": self.coefficient.to_dict(),
            "residual": self.residual,
            "iterations": self.iterations,
            "residual_history": list(self.residual_history),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "planar": self.planar,
            "decay_max": mx,
            "decay_median": med,
        }


def _convergent_mask(spec: GridSpec, mu: np.ndarray) -> np.ndarray:
    nz = mu != 0
    reach = float(np.abs(spec.z[nz]).max()) if np.any(nz) else 0.0
    return np.abs(spec.z) <= 1.9 * spec.L - reach


def solve_principal(
    mu: BeltramiCoefficient,
    tol: float = 1e-8,
    max_iter: int = 400,
    planar: bool = True,
) -> PrincipalMapSolution:
    """Solve ``d_bar f = mu d_z f`` for the principal map by Neumann iteration.

    ``planar=True`` replaces the periodic Beurling/Cauchy multipliers by their
    lattice-image-corrected versions so the result approximates the map of the
    plane rather than of the torus.
    """
    _check_bound(mu.k)
    spec = mu.spec
    m = mu.samples
    if mu.is_zero():
        zero = ComplexField.zeros(spec)
        return PrincipalMapSolution(mu, zero, zero, 0.0, 0, (), ComplexField(spec, np.ones((spec.N, spec.N))),
                                    tol, max_iter, planar)
    support = m != 0
    mu_norm = spec.h * float(np.linalg.norm(m))

    def S(h, where=None):
        if planar:
            return planar_beurling_transform(h, where=where)
        return beurling_transform(h)

    h = mu.field
    history = []
    converged = False
    for it in range(1, max_iter + 1):
        new = ComplexField(spec, m + m * S(h, support).samples)
        res = spec.h * float(np.linalg.norm(new.samples - h.samples)) / mu_norm
        history.append(res)
        h = new
        if res <= tol:
            converged = True
            break
    if not converged:
        raise DivergedError(
            f"Neumann iteration stalled at residual {history[-1]:.3e} after {max_iter} steps", history[-1]
        )

    conv = _convergent_mask(spec, m) if planar else None
    Sh = S(h, conv)
    final = spec.h * float(np.linalg.norm(h.samples - m - m * Sh.samples)) / mu_norm
    disp = planar_cauchy_transform(h) if planar else cauchy_transform(h)
    if planar:
        # Outside the convergence disk of the image series keep the periodic value.
        plain = cauchy_transform(h).samples + h.mean() * np.conj(spec.z)
        disp = ComplexField(spec, np.where(conv, disp.samples, plain))
    return PrincipalMapSolution(
        coefficient=mu,
        h_field=h,
        displacement=disp,
        residual=final,
        iterations=len(history),
        residual_history=tuple(history),
        dz_field=ComplexField(spec, 1.0 + Sh.samples),
        tol=tol,
        max_iter=max_iter,
        planar=planar,
    )


# ---------------------------------------------------------------------------
# Derivatives on conformal disks
# ---------------------------------------------------------------------------


def _max_mu_on_disk(sol: PrincipalMapSolution, z0: complex, r: float) -> float:
    spec = sol.spec
    lo_i, lo_j = spec.nearest_index(z0 - (r + spec.h) * (1 + 1j))
    hi_i, hi_j = spec.nearest_index(z0 + (r + spec.h) * (1 + 1j))
    lo_i, lo_j = max(int(lo_i), 0), max(int(lo_j), 0)
    block = sol.coefficient.samples[lo_i : int(hi_i) + 1, lo_j : int(hi_j) + 1]
    zz = spec.z[lo_i : int(hi_i) + 1, lo_j : int(hi_j) + 1]
    inside = np.abs(zz - z0) <= r
    return float(np.abs(block[inside]).max()) if np.any(inside) else 0.0


def derivatives_on_disks(sol: PrincipalMapSolution, centers, radii, m: int = 16) -> np.ndarray:
    """Vectorized angular difference quotients at radius ``r/4`` (bicubic samples)."""
    if m < 8:
        raise ConfigurationError("at least 8 angular samples are required")
    centers = np.asarray(centers, dtype=complex).ravel()
    radii = np.broadcast_to(np.asarray(radii, dtype=float), centers.shape)
    rho = radii / 4.0
    e = np.exp(2j * np.pi * np.arange(m) / m)
    ring = centers[:, None] + rho[:, None] * e[None, :]
    f_ring = sol.evaluate(ring, cubic=True)
    f0 = sol.evaluate(centers, cubic=True)
    q = (f_ring - f0[:, None]) / (rho[:, None] * e[None, :])
    return q.mean(axis=1)


def derivative_on_conformal_disk(sol: PrincipalMapSolution, center: complex, radius: float, m: int = 16):
    """``f'(center)`` from ``m`` difference quotients on the circle of radius ``radius/4``.

    Exact for polynomials of degree ``< m + 1``.  If the dilatation is not
    numerically zero on the disk a :class:`ConformalityWarning` is issued and the
    returned value has ``conformal = False``.
    """
    val = derivatives_on_disks(sol, [center], [radius], m)[0]
    worst = _max_mu_on_disk(sol, complex(center), radius)
    ok = worst <= 1e-12
    if not ok:
        warnings.warn(f"dilatation reaches {worst:.3g} on B({center}, {radius})", ConformalityWarning, stacklevel=2)
    return DerivativeEstimate(val, ok, worst)


# ---------------------------------------------------------------------------
# Inversion
# ---------------------------------------------------------------------------


def _newton_inverse(sol: PrincipalMapSolution, w: np.ndarray, steps: int = 40):
    spec = sol.spec
    lo = -spec.L
    hi = spec.L - spec.h
    z = np.clip(w.real, lo, hi) + 1j * np.clip(w.imag, lo, hi)
    z = z - sol.displacement_at(z, cubic=False)
    z = np.clip(z.real, lo, hi) + 1j * np.clip(z.imag, lo, hi)
    for _ in range(steps):
        err = sol.evaluate(z, cubic=False) - w
        if np.all(np.abs(err) <= 1e-12 * max(1.0, spec.L)):
            break
        a, b = sol.jacobian_at(z)
        det = np.abs(a) ** 2 - np.abs(b) ** 2
        det = np.where(np.abs(det) < 1e-12, 1e-12, det)
        c = -err
        step = (np.conj(a) * c - b * np.conj(c)) / det
        # Trust region of a few cells keeps iterates on the grid.
        big = np.abs(step) > 4 * spec.h
        step = np.where(big, step * (4 * spec.h) / np.where(big, np.abs(step), 1.0), step)
        z = z + step
        z = np.clip(z.real, lo, hi) + 1j * np.clip(z.imag, lo, hi)
    return z


def _triangle_lookup(sol: PrincipalMapSolution, w: complex):
    spec = sol.spec
    n = spec.N
    img = spec.z + sol.displacement.samples
    _, idx = sol._image_tree.query([w.real, w.imag], k=12)
    for flat in np.atleast_1d(idx):
        i, j = divmod(int(flat), n)
        for di in (-1, 0):
            for dj in (-1, 0):
                a, b = i + di, j + dj
                if a < 0 or b < 0 or a + 1 >= n or b + 1 >= n:
                    continue
                quads = ((a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1))
                for tri in ((0, 1, 2), (0, 2, 3)):
                    p = [quads[t] for t in tri]
                    v = np.array([img[q] for q in p])
                    src = np.array([spec.z[q] for q in p])
                    m = np.array([[v[1].real - v[0].real, v[2].real - v[0].real],
                                  [v[1].imag - v[0].imag, v[2].imag - v[0].imag]])
                    if abs(np.linalg.det(m)) < 1e-300:
                        continue
                    lam = np.linalg.solve(m, [w.real - v[0].real, w.imag - v[0].imag])
                    if lam.min() >= -1e-9 and lam.sum() <= 1 + 1e-9:
                        return src[0] + lam[0] * (src[1] - src[0]) + lam[1] * (src[2] - src[0])
    return None


def inverse_map(sol: PrincipalMapSolution, w, strict: bool = True):
    """Vectorized preimages; unresolved entries raise (``strict``) or become NaN."""
    w = np.asarray(w, dtype=complex)
    flat = w.ravel()
    z = _newton_inverse(sol, flat)
    err = np.abs(sol.evaluate(z, cubic=False) - flat)
    bad = np.flatnonzero(err > 1e-3 * sol.spec.h)
    for idx in bad:
        guess = _triangle_lookup(sol, complex(flat[idx]))
        if guess is None:
            continue
        refined = np.array([guess])
        for _ in range(20):
            e = sol.evaluate(refined, cubic=False) - flat[idx]
            a, b = sol.jacobian_at(refined)
            det = np.abs(a) ** 2 - np.abs(b) ** 2
            if abs(det[0]) < 1e-12:
                break
            refined = refined + (np.conj(a) * (-e) - b * np.conj(-e)) / det
            if not sol.spec.contains(refined)[0]:
                refined = np.array([guess])
                break
        z[idx] = refined[0]
    err = np.abs(sol.evaluate(z, cubic=False) - flat)
    failed = err > sol.spec.h
    if np.any(failed):
        if strict:
            raise OutOfRangeError(f"no preimage within one grid spacing for {int(failed.sum())} point(s)")
        z = np.where(failed, np.nan + 0j, z)
    return z.reshape(w.shape)


def numerical_inverse(sol: PrincipalMapSolution, w: complex) -> complex:
    """``z`` with ``|f(z) - w| <= h`` (Newton from ``w - disp(w)``, triangle lookup fallback)."""
    return complex(inverse_map(sol, np.array([w]))[0])


# ---------------------------------------------------------------------------
# Factorization
# ---------------------------------------------------------------------------


def truncate_dilatation(mu: BeltramiCoefficient, region: Region):
    """Split ``mu`` into ``chi_V mu`` and ``chi_{C \\ V} mu`` samplewise."""
    inside_mask = region.contains(mu.field.z)
    vals = mu.samples
    inside = np.where(inside_mask, vals, 0)
    outside = vals - inside
    sym = mu.symmetry if region.is_conjugation_symmetric() else Symmetry.NONE
    return (
        BeltramiCoefficient(ComplexField(mu.spec, inside), mu.k, sym, None),
        BeltramiCoefficient(ComplexField(mu.spec, outside), mu.k, sym, mu.support),
    )


def second_factor_coefficient(
    mu_f: BeltramiCoefficient,
    f1: PrincipalMapSolution,
    jacobian_threshold: float = 1e-6,
) -> BeltramiCoefficient:
    """Dilatation ``nu`` of ``f2`` in ``f = f2 o f1``.

    ``nu(f1(z)) = (mu_f - mu_1)/(1 - conj(mu_1) mu_f) * (d_z f1/|d_z f1|)^2`` is pulled
    back to lattice points ``w`` through the numerical inverse of ``f1``, using the
    nearest-lattice values at ``f1^{-1}(w)``.
    """
    spec = mu_f.spec
    if f1.spec != spec:
        raise ConfigurationError("factor lives on a different grid")
    mf = mu_f.samples
    m1 = f1.coefficient.samples
    a = f1.dz_field.samples
    numer = mf - m1
    active = numer != 0
    out = np.zeros((spec.N, spec.N), dtype=complex)
    if not np.any(active):
        return BeltramiCoefficient(ComplexField(spec, out), mu_f.k, Symmetry.NONE)
    if np.any(np.abs(a[active]) < jacobian_threshold):
        raise DegenerateJacobianError("|d_z f1| below threshold on the support of mu_f - mu_1")
    src_vals = numer / (1 - np.conj(m1) * mf) * (a / np.abs(np.where(a == 0, 1, a))) ** 2
    img = spec.z[active] + f1.displacement.samples[active]
    pad = 2 * spec.h
    box = (
        (spec.z.real >= img.real.min() - pad)
        & (spec.z.real <= img.real.max() + pad)
        & (spec.z.imag >= img.imag.min() - pad)
        & (spec.z.imag <= img.imag.max() + pad)
        & spec.guard_mask
    )
    targets = spec.z[box]
    pre = inverse_map(f1, targets, strict=False)
    ok = np.isfinite(pre)
    ii, jj = spec.nearest_index(np.where(ok, pre, 0))
    ii = np.clip(ii, 0, spec.N - 1)
    jj = np.clip(jj, 0, spec.N - 1)
    vals = np.where(ok, src_vals[ii, jj], 0)
    out[box] = vals
    bound = float(np.abs(out).max())
    k = max(mu_f.k, bound)
    if k >= 1:
        raise DegenerateJacobianError("composed dilatation reaches modulus 1")
    return BeltramiCoefficient(ComplexField(spec, out), k, Symmetry.NONE)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_solution(sol: PrincipalMapSolution, path):
    """Write an ``.npz`` archive to ``path`` (a filename or a writable binary stream)."""
    meta = dict(sol.to_dict(), format=SOLUTION_FORMAT)
    if hasattr(path, "write"):
        fh, own = path, False
    else:
        path = Path(path)
        fh, own = open(path, "wb"), True
    try:
        np.savez_compressed(
            fh,
            mu=sol.coefficient.samples,
            h=sol.h_field.samples,
            displacement=sol.displacement.samples,
            dz=sol.dz_field.samples,
            meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
        )
    finally:
        if own:
            fh.close()
    return path


def load_solution(path) -> PrincipalMapSolution:
    with np.load(path if hasattr(path, "read") else Path(path)) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        fmt = meta.get("format", "")
        name, _, major = fmt.partition("/")
        if name != "qclab-solution" or major.split(".")[0] != SOLUTION_FORMAT.split("/")[1]:
            raise ConfigurationError(f"unsupported solution format {fmt!r}")
        spec = GridSpec(meta["grid"]["half_width"], meta["grid"]["resolution"])
        c = meta["coefficient"]
        support = None if c["support"] is None else region_from_dict(c["support"])
        mu = BeltramiCoefficient(ComplexField(spec, data["mu"]), c["k"], Symmetry(c["symmetry"]), support)
        return PrincipalMapSolution(
            coefficient=mu,
            h_field=ComplexField(spec, data["h"]),
            displacement=ComplexField(spec, data["displacement"]),
            residual=meta["residual"],
            iterations=meta["iterations"],
            residual_history=tuple(meta["residual_history"]),
            dz_field=ComplexField(spec, data["dz"]),
            tol=meta["tol"],
            max_iter=meta["max_iter"],
            planar=meta["planar"],
        )
