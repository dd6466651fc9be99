"""Simple planar regions: finite unions of closed disks and axis-aligned squares."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z, margin: float = 0.0):
        return np.abs(np.asarray(z) - self.center) <= self.radius + margin

    def conjugate(self) -> "Disk":
        return Disk(complex(self.center).conjugate(), self.radius)

    def boundary(self, p: int) -> np.ndarray:
        theta = 2 * np.pi * np.arange(p) / p
        return self.center + self.radius * np.exp(1j * theta)

    @property
    def area(self) -> float:
        return float(np.pi * self.radius**2)

    def to_dict(self):
        c = complex(self.center)
        return {"kind": "disk", "center": [c.real, c.imag], "radius": self.radius}


@dataclass(frozen=True)
class Square:
    """Closed square ``[x0, x0 + side] x [y0, y0 + side]``."""

    x0: float
    y0: float
    side: float

    def contains(self, z, margin: float = 0.0):
        z = np.asarray(z)
        return (
            (z.real >= self.x0 - margin)
            & (z.real <= self.x0 + self.side + margin)
            & (z.imag >= self.y0 - margin)
            & (z.imag <= self.y0 + self.side + margin)
        )

    def conjugate(self) -> "Square":
        return Square(self.x0, -self.y0 - self.side, self.side)

    @property
    def area(self) -> float:
        return self.side**2

    def to_dict(self):
        return {"kind": "square", "x0": self.x0, "y0": self.y0, "side": self.side}


@dataclass(frozen=True)
class Region:
    """Union of disks and squares; the empty union is the empty set."""

    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def contains(self, z, margin: float = 0.0):
        z = np.asarray(z)
        out = np.zeros(z.shape, dtype=bool)
        for p in self.parts:
            out |= p.contains(z, margin)
        return out

    def is_conjugation_symmetric(self) -> bool:
        mine = set(self.parts)
        return all(p.conjugate() in mine for p in self.parts)

    def __or__(self, other: "Region") -> "Region":
        return Region(self.parts + other.parts)

    def to_dict(self):
        return {"kind": "union", "parts": [p.to_dict() for p in self.parts]}


UNIT_DISK = Region((Disk(0j, 1.0),))


def region_from_dict(d) -> Region:
    parts = []
    for p in d.get("parts", []):
        if p["kind"] == "disk":
            parts.append(Disk(complex(*p["center"]), float(p["radius"])))
        elif p["kind"] == "square":
            parts.append(Square(float(p["x0"]), float(p["y0"]), float(p["side"])))
        else:
            raise ValueError(f"unknown region part {p['kind']!r}")
    return Region(tuple(parts))
