"""Periodic-grid complex fields and spectral Cauchy/Beurling transforms.

The plane is truncated to the torus ``[-L, L)^2`` sampled on an ``N x N``
lattice.  Sample ``(i, j)`` sits at ``z = (-L + i h) + 1j * (-L + j h)`` with
``h = 2L/N``; axis 0 is the real direction.  All transforms are exact Fourier
multipliers on the dual lattice ``zeta = (pi/L) (m + 1j n)`` with integer
``m, n`` in ``(-N/2, N/2]``.

Wirtinger conventions: ``d_z = (d_x - 1j d_y)/2`` and ``d_bar = (d_x + 1j d_y)/2``,
so the symbol of ``d_bar`` is ``1j*zeta/2`` and that of ``d_z`` is
``1j*conj(zeta)/2``.  The Beurling transform has symbol ``conj(zeta)/zeta`` and
the Cauchy transform ``-2j/zeta``; both vanish at ``zeta = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import CompactSupportWarning, ConfigurationError

__all__ = [
    "GridSpec",
    "ComplexField",
    "FourierMultiplier",
    "BEURLING",
    "CAUCHY",
    "D_BAR",
    "D_Z",
    "beurling_transform",
    "cauchy_transform",
    "d_bar",
    "d_z",
    "weierstrass_coefficients",
    "planar_beurling_transform",
    "planar_cauchy_transform",
    "dump_field",
    "load_field",
]


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    resolution: int

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ConfigurationError(f"half_width must be positive, got {self.half_width}")
        n = self.resolution
        if int(n) != n or n < 16 or n % 2:
            raise ConfigurationError(f"resolution must be an even integer >= 16, got {n}")
        object.__setattr__(self, "resolution", int(n))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def N(self) -> int:
        return self.resolution

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.resolution

    @property
    def area(self) -> float:
        return (2.0 * self.half_width) ** 2

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + np.arange(self.resolution) * self.h

    @cached_property
    def z(self) -> np.ndarray:
        a = self.axis
        out = a[:, None] + 1j * a[None, :]
        out.setflags(write=False)
        return out

    @cached_property
    def frequencies(self) -> np.ndarray:
        n = self.resolution
        m = np.fft.fftfreq(n, d=1.0 / n)
        m[n // 2] = n // 2
        out = (math.pi / self.half_width) * (m[:, None] + 1j * m[None, :])
        out.setflags(write=False)
        return out

    @cached_property
    def guard_mask(self) -> np.ndarray:
        """Samples with ``|Re z|, |Im z| <= L/2``."""
        half = 0.5 * self.half_width + 1e-12 * self.half_width
        a = np.abs(self.axis) <= half
        out = a[:, None] & a[None, :]
        out.setflags(write=False)
        return out

    def mirror_index(self) -> np.ndarray:
        """Index ``j'`` of the sample at ``conj(z)`` for column ``j``."""
        return (-np.arange(self.resolution)) % self.resolution

    @property
    def real_axis_index(self) -> int:
        """Column index of the row ``Im z = 0``."""
        return self.resolution // 2

    def fractional_index(self, z):
        z = np.asarray(z)
        return (z.real + self.half_width) / self.h, (z.imag + self.half_width) / self.h

    def nearest_index(self, z):
        fi, fj = self.fractional_index(z)
        return np.rint(fi).astype(int), np.rint(fj).astype(int)

    def contains(self, z, margin: float = 0.0):
        """Whether ``z`` lies in ``[-L, L - h]^2`` shrunk by ``margin``."""
        z = np.asarray(z)
        lo = -self.half_width + margin
        hi = self.half_width - self.h - margin
        return (z.real >= lo) & (z.real <= hi) & (z.imag >= lo) & (z.imag <= hi)


@dataclass(frozen=True, eq=False)
class ComplexField:
    spec: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128, copy=True)
        n = self.spec.resolution
        if arr.shape != (n, n):
            raise ConfigurationError(f"samples have shape {arr.shape}, grid expects {(n, n)}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "ComplexField":
        return cls(spec, np.zeros((spec.N, spec.N), complex))

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "ComplexField":
        return cls(spec, np.broadcast_to(fn(spec.z), (spec.N, spec.N)))

    @property
    def z(self) -> np.ndarray:
        return self.spec.z

    def l2_norm(self) -> float:
        return self.spec.h * float(np.linalg.norm(self.samples))

    def mean(self) -> complex:
        return complex(self.samples.mean())

    def sup_norm(self) -> float:
        return float(np.abs(self.samples).max())

    def conj(self) -> "ComplexField":
        return ComplexField(self.spec, np.conj(self.samples))

    def mirrored(self) -> "ComplexField":
        """The field ``z -> F(conj(z))`` sampled on the same lattice."""
        return ComplexField(self.spec, self.samples[:, self.spec.mirror_index()])

    def masked(self, mask) -> "ComplexField":
        return ComplexField(self.spec, np.where(mask, self.samples, 0))

    def is_compactly_supported(self, rtol: float = 1e-12) -> bool:
        outside = np.abs(self.samples[~self.spec.guard_mask])
        if outside.size == 0:
            return True
        scale = max(self.sup_norm(), 1e-300)
        return bool(outside.max() <= rtol * scale)

    def _coerce(self, other):
        if isinstance(other, ComplexField):
            if other.spec != self.spec:
                raise ConfigurationError("fields live on different grids")
            return other.samples
        return other

    def __add__(self, other):
        return ComplexField(self.spec, self.samples + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ComplexField(self.spec, self.samples - self._coerce(other))

    def __rsub__(self, other):
        return ComplexField(self.spec, self._coerce(other) - self.samples)

    def __mul__(self, other):
        return ComplexField(self.spec, self.samples * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ComplexField(self.spec, self.samples / self._coerce(other))

    def __neg__(self):
        return ComplexField(self.spec, -self.samples)


@dataclass(frozen=True)
class FourierMultiplier:
    """A translation-invariant operator given by its symbol on nonzero frequencies."""

    symbol: Callable[[np.ndarray], np.ndarray]
    dc_value: complex = 0.0
    name: str = ""
    unimodular: bool = False

    def values(self, spec: GridSpec) -> np.ndarray:
        zeta = spec.frequencies
        out = np.empty(zeta.shape, dtype=complex)
        nz = zeta != 0
        out[nz] = self.symbol(zeta[nz])
        out[~nz] = self.dc_value
        # The real-direction Nyquist row stands for both +N/2 and -N/2.  Averaging
        # the two aliases keeps the operator equivariant under the reflection
        # F(z) -> conj(F(conj z)), which exchanges them.
        ny = spec.N // 2
        row = zeta[ny, :]
        avg = 0.5 * (self.symbol(row) + self.symbol(-np.conj(row)))
        if self.unimodular:
            mod = np.abs(avg)
            avg = np.where(mod > 1e-12, avg / np.where(mod > 1e-12, mod, 1.0), 1.0)
        out[ny, :] = avg
        return out

    def __call__(self, f: ComplexField) -> ComplexField:
        if not isinstance(f, ComplexField):
            raise ConfigurationError("multipliers act on ComplexField values")
        coeffs = np.fft.fft2(f.samples)
        return ComplexField(f.spec, np.fft.ifft2(coeffs * self.values(f.spec)))


BEURLING = FourierMultiplier(lambda z: np.conj(z) / z, 0.0, "beurling", unimodular=True)
CAUCHY = FourierMultiplier(lambda z: -2j / z, 0.0, "cauchy")
D_BAR = FourierMultiplier(lambda z: 0.5j * z, 0.0, "d_bar")
D_Z = FourierMultiplier(lambda z: 0.5j * np.conj(z), 0.0, "d_z")


def _check_support(f: ComplexField, op: str):
    if not f.is_compactly_supported():
        warnings.warn(
            f"{op}: input does not vanish outside the guard band |Re z|,|Im z| <= L/2",
            CompactSupportWarning,
            stacklevel=3,
        )


def beurling_transform(f: ComplexField) -> ComplexField:
    """Beurling transform as the unimodular multiplier ``conj(zeta)/zeta``."""
    _check_support(f, "beurling_transform")
    return BEURLING(f)


def cauchy_transform(f: ComplexField) -> ComplexField:
    """Periodic inverse of ``d_bar`` on mean-zero fields (DC coefficient dropped)."""
    _check_support(f, "cauchy_transform")
    return CAUCHY(f)


def d_bar(f: ComplexField) -> ComplexField:
    return D_BAR(f)


def d_z(f: ComplexField) -> ComplexField:
    return D_Z(f)


# ---------------------------------------------------------------------------
# Lattice-image correction.  On the torus the Cauchy kernel is
# (zeta_W(w) - (pi/A) conj(w)) / pi and the Beurling kernel is -wp(w)/pi, where
# zeta_W and wp are the Weierstrass functions of the square period lattice
# 2L(Z + iZ).  Their Laurent tails are polynomials, so the difference to the
# planar operators is a polynomial in z built from moments of the input.
# ---------------------------------------------------------------------------

_G4_UNIT_SQUARE = math.gamma(0.25) ** 8 / (960.0 * math.pi**2)


def weierstrass_coefficients(half_width: float, n_max: int = 8) -> dict[int, float]:
    """Coefficients ``c_n`` of ``wp(w) = w^-2 + sum_{n>=2} c_n w^(2n-2)``.

    Lattice ``2L(Z + iZ)``; ``c_n`` vanishes for odd ``n`` by the fourfold symmetry.
    """
    c = {2: 3.0 * _G4_UNIT_SQUARE / (2.0 * half_width) ** 4, 3: 0.0}
    for n in range(4, n_max + 1):
        s = sum(c[m] * c[n - m] for m in range(2, n - 1))
        c[n] = 3.0 * s / ((2 * n + 1) * (n - 3))
    return c


def _moments(f: ComplexField, qmax: int) -> np.ndarray:
    vals = f.samples
    nz = vals != 0
    xi = f.spec.z[nz]
    w = vals[nz] * f.spec.h**2
    out = np.empty(qmax + 1, dtype=complex)
    p = np.ones_like(xi)
    for q in range(qmax + 1):
        out[q] = np.sum(w * p)
        p = p * xi
    return out


def _convolution_poly(moments: np.ndarray, degree_weights: dict[int, float]) -> np.ndarray:
    """Coefficients in z of ``sum_p a_p * int f(xi) (z - xi)^p dxi``."""
    top = max(degree_weights)
    coef = np.zeros(top + 1, dtype=complex)
    for p, a in degree_weights.items():
        if a == 0.0:
            continue
        for q in range(p + 1):
            coef[p - q] += a * math.comb(p, q) * (-1) ** q * moments[q]
    return coef


def _horner(coef: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.full(z.shape, coef[-1], dtype=complex)
    for c in coef[-2::-1]:
        out = out * z + c
    return out


def planar_beurling_transform(f: ComplexField, n_max: int = 8, where=None) -> ComplexField:
    """Beurling transform with the periodic-image contribution removed.

    Accurate where ``|z - xi| < 2L`` for all ``xi`` in the support; elsewhere the
    correction series does not converge and ``where`` should exclude those samples.
    """
    base = beurling_transform(f)
    c = weierstrass_coefficients(f.spec.half_width, n_max)
    weights = {2 * n - 2: c[n] / math.pi for n in range(2, n_max + 1)}
    mom = _moments(f, max(weights))
    coef = _convolution_poly(mom, weights)
    out = np.array(base.samples)
    if where is None:
        out += _horner(coef, f.spec.z)
    else:
        out[where] += _horner(coef, f.spec.z[where])
    return ComplexField(f.spec, out)


def planar_cauchy_transform(f: ComplexField, n_max: int = 8) -> ComplexField:
    """Cauchy transform ``(1/pi) int f(xi)/(z - xi)`` approximated on the whole box.

    Adds back the mean (``mean(f) * conj(z)`` and its centering constant) that the
    periodic multiplier discards, plus the Weierstrass tail of the lattice images.
    """
    base = cauchy_transform(f)
    spec = f.spec
    c = weierstrass_coefficients(spec.half_width, n_max)
    weights = {2 * n - 1: c[n] / ((2 * n - 1) * math.pi) for n in range(2, n_max + 1)}
    mom = _moments(f, max(weights))
    coef = _convolution_poly(mom, weights)
    mean = mom[0] / spec.area
    centre = np.sum(f.samples * np.conj(spec.z)) * spec.h**2 / spec.area
    out = base.samples + mean * np.conj(spec.z) - centre + _horner(coef, spec.z)
    return ComplexField(spec, out)


# ---------------------------------------------------------------------------
# Debug dumps: row-major, real/imag interleaved.
# ---------------------------------------------------------------------------


def dump_field(f: ComplexField, path, fmt: str = "bin") -> Path:
    path = Path(path)
    inter = np.empty((f.spec.N, 2 * f.spec.N))
    inter[:, 0::2] = f.samples.real
    inter[:, 1::2] = f.samples.imag
    if fmt == "bin":
        inter.astype("<f8").tofile(path)
    elif fmt == "csv":
        header = f"half_width={f.spec.half_width!r},resolution={f.spec.resolution}"
        np.savetxt(path, inter, delimiter=",", header=header, fmt="%.17g")
    else:
        raise ConfigurationError(f"unknown dump format {fmt!r}")
    return path


def load_field(path, spec: GridSpec, fmt: str = "bin") -> ComplexField:
    path = Path(path)
    if fmt == "bin":
        inter = np.fromfile(path, dtype="<f8")
    elif fmt == "csv":
        inter = np.loadtxt(path, delimiter=",")
    else:
        raise ConfigurationError(f"unknown dump format {fmt!r}")
    if inter.size != 2 * spec.N * spec.N:
        raise ConfigurationError(f"{path} holds {inter.size} values, grid needs {2 * spec.N**2}")
    inter = inter.reshape(spec.N, 2 * spec.N)
    return ComplexField(spec, inter[:, 0::2] + 1j * inter[:, 1::2])
