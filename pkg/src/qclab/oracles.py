"""Slow reference computations used to cross-check the fast paths.

Each routine takes a different route from the production code: direct
principal-value sums instead of Fourier multipliers, and exhaustive enumeration
of dyadic squares or arrangement points instead of candidate reduction.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .dyadic_geometry import UNIT_LATTICE, DyadicSquare, SquareFamily, common_ancestor
from .field_core import ComplexField


def direct_beurling_quadrature(f: ComplexField, mask=None, block: int = 256) -> np.ndarray:
    """``-(1/pi) p.v. sum f(xi) h^2 / (z - xi)^2`` over lattice samples, skipping ``xi = z``.

    The lattice is symmetric about every sample, so omitting the centre cell is the
    discrete principal value.  Evaluated at the samples selected by ``mask``.
    """
    spec = f.spec
    src = f.samples != 0
    xi = spec.z[src]
    val = f.samples[src] * spec.h**2
    targets = spec.z if mask is None else spec.z[mask]
    flat = np.ravel(targets)
    out = np.empty(flat.shape, dtype=complex)
    for a in range(0, flat.size, block):
        d = flat[a : a + block, None] - xi[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(d == 0, 0, 1 / np.where(d == 0, 1, d) ** 2)
        out[a : a + block] = -(k * val[None, :]).sum(axis=1) / math.pi
    return out.reshape(np.shape(targets))


def _towers(members):
    groups = defaultdict(list)
    for q in members:
        groups[(q.i < 0, q.j < 0)].append(q)
    return list(groups.values())


def packing_alpha_bruteforce(family: SquareFamily, t: float | None = None) -> float:
    """Scan every dyadic square from the common root down to the finest member generation."""
    t = family.t if t is None else t
    best = 0.0
    for tower in _towers(family.members):
        if len(tower) < 2:
            continue
        root = tower[0]
        for q in tower[1:]:
            root = common_ancestor(root, q)
        finest = max(q.generation for q in tower)
        for g in range(root.generation, finest + 1):
            n = 1 << (g - root.generation)
            i0, j0 = root.i * n, root.j * n
            for di in range(n):
                for dj in range(n):
                    R = DyadicSquare(g, i0 + di, j0 + dj, family.lattice)
                    inside = [q for q in tower if R.contains(q)]
                    if len(inside) < 2:
                        continue
                    val = math.fsum(2.0 ** (-(q.generation - g) * t) for q in inside)
                    best = max(best, val)
    return best


def smoothness_tau_bruteforce(family: SquareFamily) -> float:
    """Arrangement enumeration in floating coordinates (dyadic values are exact)."""
    members = family.members
    boxes = []
    for q in members:
        c, s = q.corner, q.side
        boxes.append((c.real - s / 2, c.real + 1.5 * s, c.imag - s / 2, c.imag + 1.5 * s))
    xs = sorted({b[0] for b in boxes} | {b[1] for b in boxes})
    ys = sorted({b[2] for b in boxes} | {b[3] for b in boxes})
    xs_all = xs + [(a + b) / 2 for a, b in zip(xs, xs[1:])]
    ys_all = ys + [(a + b) / 2 for a, b in zip(ys, ys[1:])]
    depth = 0
    for x in xs_all:
        for y in ys_all:
            d = sum(1 for b in boxes if b[0] <= x <= b[1] and b[2] <= y <= b[3])
            depth = max(depth, d)
    ratio = 1.0
    for a, p in enumerate(members):
        for b, q in enumerate(members):
            pa, qb = boxes[a], boxes[b]
            if pa[0] <= qb[1] and qb[0] <= pa[1] and pa[2] <= qb[3] and qb[2] <= pa[3]:
                ratio = max(ratio, p.side / q.side)
    return max(1.0, ratio, float(depth))


def random_family(rng: np.random.Generator, max_members: int = 50, max_depth: int = 5, t: float | None = None,
                  lattice=None) -> SquareFamily:
    """Random disjoint dyadic squares inside the root square of generation 0."""
    lattice = UNIT_LATTICE if lattice is None else lattice
    target = int(rng.integers(1, max_members + 1))
    chosen: list[DyadicSquare] = []
    attempts = 0
    while len(chosen) < target and attempts < 20 * max_members:
        attempts += 1
        g = int(rng.integers(1, max_depth + 1))
        n = 1 << g
        q = DyadicSquare(g, int(rng.integers(0, n)), int(rng.integers(0, n)), lattice)
        if any(not q.is_disjoint(o) for o in chosen):
            continue
        chosen.append(q)
    if t is None:
        t = float(rng.uniform(0.2, 1.9))
    return SquareFamily(tuple(chosen), t, lattice)
