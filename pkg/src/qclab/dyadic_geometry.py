"""Dyadic squares, smooth and packed families, and the packing weight.

All combinatorics run on integer indices ``(generation, i, j)``.  A square of
generation ``g`` has side ``root_side * 2**-g`` and lower-left corner
``origin + side * (i + 1j*j)``; generations may be negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError

FAMILY_FORMAT = "qclab-family/1"


@dataclass(frozen=True)
class DyadicLattice:
    root_side: float = 1.0
    origin: complex = 0j

    def __post_init__(self):
        if not self.root_side > 0:
            raise ConfigurationError("root_side must be positive")
        object.__setattr__(self, "origin", complex(self.origin))


UNIT_LATTICE = DyadicLattice()


@dataclass(frozen=True)
class DyadicSquare:
    generation: int
    i: int
    j: int
    lattice: DyadicLattice = UNIT_LATTICE

    @property
    def side(self) -> float:
        return math.ldexp(self.lattice.root_side, -self.generation)

    @property
    def corner(self) -> complex:
        return self.lattice.origin + self.side * complex(self.i, self.j)

    @property
    def center(self) -> complex:
        return self.corner + 0.5 * self.side * (1 + 1j)

    @property
    def parent(self) -> "DyadicSquare":
        return DyadicSquare(self.generation - 1, self.i >> 1, self.j >> 1, self.lattice)

    def children(self) -> tuple["DyadicSquare", ...]:
        g, i, j = self.generation + 1, 2 * self.i, 2 * self.j
        return tuple(DyadicSquare(g, i + a, j + b, self.lattice) for b in (0, 1) for a in (0, 1))

    def ancestor(self, generation: int) -> "DyadicSquare":
        d = self.generation - generation
        if d < 0:
            raise DomainError("requested ancestor is finer than the square")
        return DyadicSquare(generation, self.i >> d, self.j >> d, self.lattice)

    def contains(self, other: "DyadicSquare") -> bool:
        """Dyadic containment (``other`` equal to or nested inside ``self``)."""
        return other.generation >= self.generation and other.ancestor(self.generation) == self

    def is_disjoint(self, other: "DyadicSquare") -> bool:
        """Interior disjointness; dyadic squares are either disjoint or nested."""
        return not (self.contains(other) or other.contains(self))

    def boundary(self, p: int) -> np.ndarray:
        """``p`` points (``p`` a multiple of 4) equally spaced along the boundary, corners included."""
        if p % 4 or p < 4:
            raise ConfigurationError("boundary sample count must be a positive multiple of 4")
        q = p // 4
        s = np.arange(q) / q
        edges = [s, 1 + 1j * s, (1 - s) + 1j, 1j * (1 - s)]
        return self.corner + self.side * np.concatenate(edges)

    def __str__(self):
        return f"{self.generation} {self.i} {self.j}"


def common_ancestor(a: DyadicSquare, b: DyadicSquare) -> DyadicSquare | None:
    """Smallest dyadic square containing both, or None if they lie in different quadrant towers."""
    if a.lattice != b.lattice:
        raise ConfigurationError("squares live on different lattices")
    g = min(a.generation, b.generation)
    a, b = a.ancestor(g), b.ancestor(g)
    while a != b:
        # Shifts keep the sign, so towers with differing signs never merge.
        if (a.i < 0) != (b.i < 0) or (a.j < 0) != (b.j < 0):
            return None
        a, b = a.parent, b.parent
    return a


@dataclass(frozen=True, eq=False)
class SquareFamily:
    members: tuple
    t: float = 1.0
    lattice: DyadicLattice = UNIT_LATTICE

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not 0 < self.t <= 2:
            raise DomainError(f"exponent t must lie in (0, 2], got {self.t}")
        for q in members:
            if q.lattice != self.lattice:
                raise ConfigurationError("member square on a different lattice")
        seen = set(members)
        if len(seen) != len(members):
            raise ConfigurationError("family repeats a square")
        if members:
            g0 = min(q.generation for q in members)
            for q in members:
                for g in range(g0, q.generation):
                    if q.ancestor(g) in seen:
                        raise ConfigurationError(f"squares {q} and {q.ancestor(g)} are nested")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @classmethod
    def from_triples(cls, triples, t=1.0, lattice=UNIT_LATTICE) -> "SquareFamily":
        return cls(tuple(DyadicSquare(int(g), int(i), int(j), lattice) for g, i, j in triples), t, lattice)

    def with_members(self, members) -> "SquareFamily":
        return SquareFamily(tuple(members), self.t, self.lattice)

    def to_text(self) -> str:
        o = self.lattice.origin
        lines = [
            f"# {FAMILY_FORMAT}",
            f"# lattice root_side={self.lattice.root_side!r} origin={o.real!r},{o.imag!r} t={self.t!r}",
        ]
        lines += [str(q) for q in self.members]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SquareFamily":
        root, origin, t = 1.0, 0j, 1.0
        triples = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("lattice"):
                    for tok in body.split()[1:]:
                        key, _, val = tok.partition("=")
                        if key == "root_side":
                            root = float(val)
                        elif key == "origin":
                            x, y = val.split(",")
                            origin = complex(float(x), float(y))
                        elif key == "t":
                            t = float(val)
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ConfigurationError(f"bad family line {raw!r}; expected 'g i j'")
            triples.append(tuple(int(p) for p in parts))
        return cls.from_triples(triples, t, DyadicLattice(root, origin))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path

    @classmethod
    def load(cls, path) -> "SquareFamily":
        return cls.from_text(Path(path).read_text())


# ---------------------------------------------------------------------------
# Smoothness
# ---------------------------------------------------------------------------


def _doubled_boxes(members) -> np.ndarray:
    """Closed doubled squares in integer units of half the finest side: rows (x0, x1, y0, y1)."""
    G = max(q.generation for q in members)
    out = np.empty((len(members), 4), dtype=np.int64)
    for n, q in enumerate(members):
        s = 1 << (G - q.generation)
        out[n] = (2 * q.i * s - s, 2 * q.i * s + 3 * s, 2 * q.j * s - s, 2 * q.j * s + 3 * s)
    return out


def overlap_depth(members) -> int:
    """``sup_z sum_Q chi_{2Q}(z)`` over closed doubles.

    For closed boxes the deepest point can be taken with coordinates
    ``(x0 of one box, y0 of another)``, so the candidate set is finite.
    """
    boxes = _doubled_boxes(members)
    xs = np.unique(boxes[:, 0])
    ys = np.unique(boxes[:, 2])
    best = 0
    for x in xs:
        col = boxes[(boxes[:, 0] <= x) & (x <= boxes[:, 1])]
        if len(col) <= best:
            continue
        inside = (col[:, 2][None, :] <= ys[:, None]) & (ys[:, None] <= col[:, 3][None, :])
        best = max(best, int(inside.sum(axis=1).max()))
    return best


def side_ratio_bound(members) -> float:
    """Largest ``l(P)/l(Q)`` over pairs whose closed doubles intersect."""
    boxes = _doubled_boxes(members)
    gens = np.array([q.generation for q in members])
    hit = (
        (boxes[:, None, 0] <= boxes[None, :, 1])
        & (boxes[None, :, 0] <= boxes[:, None, 1])
        & (boxes[:, None, 2] <= boxes[None, :, 3])
        & (boxes[None, :, 2] <= boxes[:, None, 3])
    )
    gap = np.abs(gens[:, None] - gens[None, :])[hit]
    return float(2.0 ** int(gap.max())) if gap.size else 1.0


def smoothness_tau(family: SquareFamily) -> float:
    """Least ``tau >= 1`` for which the family is tau-smooth."""
    if len(family) == 0:
        raise DomainError("smoothness of an empty family is undefined")
    members = family.members
    return max(1.0, side_ratio_bound(members), float(overlap_depth(members)))


# ---------------------------------------------------------------------------
# Packing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PackingResult:
    alpha: float
    admissible: bool
    maximizer: DyadicSquare | None = None

    def __float__(self):
        return self.alpha


def candidate_roots(members) -> set:
    out = set()
    for a, b in combinations(members, 2):
        r = common_ancestor(a, b)
        if r is not None:
            out.add(r)
    return out


def _ratio_sum(members, root: DyadicSquare, t: float, sizes=None, root_size=None) -> float:
    terms = []
    for n, q in enumerate(members):
        if root.contains(q):
            if sizes is None:
                terms.append(2.0 ** (-(q.generation - root.generation) * t))
            else:
                terms.append((sizes[n] / root_size) ** t)
    return math.fsum(terms)


def packing_result(family: SquareFamily, t: float | None = None) -> PackingResult:
    t = family.t if t is None else t
    if not 0 < t <= 2:
        raise DomainError(f"exponent t must lie in (0, 2], got {t}")
    roots = candidate_roots(family.members)
    if not roots:
        return PackingResult(0.0, False, None)
    best, arg = -1.0, None
    for r in sorted(roots, key=lambda q: (q.generation, q.i, q.j)):
        val = _ratio_sum(family.members, r, t)
        if val > best:
            best, arg = val, r
    return PackingResult(best, True, arg)


def packing_alpha(family: SquareFamily, t: float | None = None) -> float:
    """Max over dyadic ``R`` containing two members of ``sum_{Q in R} l(Q)^t / l(R)^t``.

    Families without an admissible ``R`` give 0; see :func:`packing_result` for the flag.
    """
    return packing_result(family, t).alpha


# ---------------------------------------------------------------------------
# Packing weight
# ---------------------------------------------------------------------------


def _overlap_area(p: DyadicSquare, q: DyadicSquare) -> float:
    if p.contains(q):
        return q.side**2
    if q.contains(p):
        return p.side**2
    return 0.0


def _reduce_region(region) -> list:
    squares = list(dict.fromkeys(region))
    keep = []
    for q in squares:
        if not any(o is not q and o != q and o.contains(q) for o in squares):
            keep.append(q)
    return keep


@dataclass(frozen=True, eq=False)
class PackingWeight:
    family: SquareFamily

    @property
    def t(self) -> float:
        return self.family.t

    @cached_property
    def values(self) -> tuple:
        return tuple(q.side ** (self.t - 2) for q in self.family.members)

    def total_mass(self) -> float:
        return math.fsum(q.side**self.t for q in self.family.members)

    def measure(self, region) -> float:
        return weight_measure(self, region)

    def sample(self, spec) -> np.ndarray:
        """Weight at the lattice samples of ``spec`` with half-open square membership."""
        out = np.zeros((spec.N, spec.N))
        ax = spec.axis
        for q, v in zip(self.family.members, self.values):
            c = q.corner
            xi = (ax >= c.real) & (ax < c.real + q.side)
            yj = (ax >= c.imag) & (ax < c.imag + q.side)
            out[np.ix_(xi, yj)] += v
        return out


def weight_measure(w: PackingWeight, region) -> float:
    """``omega(region)`` for a union of dyadic squares, in closed form."""
    sq = _reduce_region(region)
    terms = []
    for p, v in zip(w.family.members, w.values):
        for q in sq:
            a = _overlap_area(p, q)
            if a:
                terms.append(v * a)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Quasisquares
# ---------------------------------------------------------------------------


def sampled_diameter(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=complex).ravel()
    d = np.abs(pts[:, None] - pts[None, :])
    return float(d.max())


@dataclass(frozen=True, eq=False)
class QuasisquareFamily:
    base: SquareFamily
    f: object
    samples: int = 64

    def __post_init__(self):
        if self.samples < 16 or self.samples % 4:
            raise ConfigurationError("boundary samples must be a multiple of 4 and at least 16")

    def diameter(self, q: DyadicSquare, samples: int | None = None) -> float:
        p = self.samples if samples is None else samples
        return sampled_diameter(self.f(q.boundary(p)))


def packing_alpha_quasi_result(family: QuasisquareFamily, t: float | None = None, samples=None) -> PackingResult:
    base = family.base
    t = base.t if t is None else t
    if not 0 < t <= 2:
        raise DomainError(f"exponent t must lie in (0, 2], got {t}")
    roots = candidate_roots(base.members)
    if not roots:
        return PackingResult(0.0, False, None)
    sizes = [family.diameter(q, samples) for q in base.members]
    best, arg = -1.0, None
    for r in sorted(roots, key=lambda q: (q.generation, q.i, q.j)):
        val = _ratio_sum(base.members, r, t, sizes, family.diameter(r, samples))
        if val > best:
            best, arg = val, r
    return PackingResult(best, True, arg)


def packing_alpha_quasi(family: QuasisquareFamily, t: float | None = None, samples=None) -> float:
    """Packing constant with sampled image diameters in place of side lengths."""
    return packing_alpha_quasi_result(family, t, samples).alpha


# ---------------------------------------------------------------------------
# Splitting rows of equal squares
# ---------------------------------------------------------------------------


def split_into_packed_subfamilies(family: SquareFamily, alpha: float, t: float | None = None) -> list:
    """Round-robin split of a row of equal squares into parts that are each alpha-packed.

    The number of parts grows until every part verifies ``packing_alpha <= alpha``.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    members = list(family.members)
    if not members:
        return [family]
    gens = {q.generation for q in members}
    if len(gens) != 1:
        raise DomainError("squares must share one side length")
    side = members[0].side
    if any(abs(q.center.imag) > 1e-12 * max(side, 1.0) for q in members):
        raise DomainError("square centers must lie on the real axis")
    t = family.t if t is None else t
    ordered = sorted(members, key=lambda q: (q.i, q.j))
    for m in range(1, len(ordered) + 1):
        parts = [family.with_members(ordered[r::m]) for r in range(m)]
        if all(packing_alpha(p, t) <= alpha for p in parts):
            return parts
    raise AssertionError("singleton parts always verify")  # pragma: no cover
