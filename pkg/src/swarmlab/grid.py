"""Toroidal lattice arithmetic and the shared pheromone field substrate.

Every simulation module runs on a wrapped 2D grid: coordinates are
``(x, y)`` tuples, canonicalized by modular arithmetic, and scalar
pheromone is stored as a dense non-negative float64 array indexed
``values[y, x]`` (row-major).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np


class NegativeAmountError(ValueError):
    """Deposit amount below zero."""


class RhoOutOfRangeError(ValueError):
    """Evaporation rate outside [0, 1]."""


class AlphaOutOfRangeError(ValueError):
    """Diffusion mixing factor outside [0, 1]."""


@dataclass(frozen=True)
class TorusDims:
    """Width and height of a wrapped lattice, in cells."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"torus dims must be >= 1, got {self.width}x{self.height}")

    @property
    def cell_count(self) -> int:
        return self.width * self.height

    def __iter__(self) -> Iterator[int]:
        yield self.width
        yield self.height


Coord = tuple[int, int]


def torus_wrap(c: Coord, dims: TorusDims) -> Coord:
    """Map any integer pair onto its canonical cell (0 <= x < W, 0 <= y < H)."""
    return (c[0] % dims.width, c[1] % dims.height)


class NeighborhoodKind(Enum):
    MOORE = "moore"
    VON_NEUMANN = "von_neumann"


def neighborhood_offsets(kind: NeighborhoodKind, radius: int = 1) -> list[Coord]:
    """Relative (dx, dy) offsets for a neighborhood, row-major, center excluded.

    Moore radius r has (2r+1)^2 - 1 offsets; Von Neumann keeps those with
    |dx| + |dy| <= r.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    offsets = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx == 0 and dy == 0:
                continue
            if kind is NeighborhoodKind.VON_NEUMANN and abs(dx) + abs(dy) > radius:
                continue
            offsets.append((dx, dy))
    return offsets


def neighborhood(
    c: Coord, dims: TorusDims, kind: NeighborhoodKind = NeighborhoodKind.MOORE, radius: int = 1
) -> list[Coord]:
    """Wrapped neighbor cells of ``c``, in deterministic row-major offset order.

    The center cell is excluded. On tori smaller than the kernel the same
    cell can appear more than once: duplicates are retained so counts match
    plain modular indexing.
    """
    return [torus_wrap((c[0] + dx, c[1] + dy), dims) for dx, dy in neighborhood_offsets(kind, radius)]


@dataclass
class PheromoneField:
    """Dense non-negative scalar field over a torus; the swarm's external memory.

    ``values`` has shape (height, width), float64. Mutating calls
    (:meth:`deposit`, :meth:`evaporate`, :meth:`diffuse`) are single-writer:
    do not share one field between concurrently mutating threads.
    """

    dims: TorusDims
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.values is None:
            self.values = np.zeros((self.dims.height, self.dims.width), dtype=np.float64)
        else:
            self.values = np.asarray(self.values, dtype=np.float64)
            if self.values.shape != (self.dims.height, self.dims.width):
                raise ValueError(
                    f"values shape {self.values.shape} does not match dims "
                    f"{self.dims.height}x{self.dims.width}"
                )
            if np.any(self.values < 0):
                raise ValueError("pheromone values must be non-negative")

    @classmethod
    def zeros(cls, dims: TorusDims) -> "PheromoneField":
        return cls(dims)

    def copy(self) -> "PheromoneField":
        return PheromoneField(self.dims, self.values.copy())

    def value_at(self, c: Coord) -> float:
        x, y = torus_wrap(c, self.dims)
        return float(self.values[y, x])

    def total(self) -> float:
        return float(self.values.sum())

    def deposit(self, c: Coord, amount: float) -> None:
        """Add ``amount`` pheromone units at the wrapped cell ``c``."""
        if amount < 0:
            raise NegativeAmountError(f"deposit amount must be >= 0, got {amount}")
        x, y = torus_wrap(c, self.dims)
        self.values[y, x] += amount

    def evaporate(self, rho: float) -> None:
        """Multiplicative decay: every value becomes (1 - rho) times itself."""
        if not 0.0 <= rho <= 1.0:
            raise RhoOutOfRangeError(f"rho must be in [0, 1], got {rho}")
        self.values *= 1.0 - rho

    def diffuse(self, alpha: float) -> None:
        """Mass-conserving 4-neighbor smoothing.

        Each cell keeps (1 - alpha) of its value and receives alpha/4 of
        each Von Neumann neighbor's value; total mass is conserved.
        """
        if not 0.0 <= alpha <= 1.0:
            raise AlphaOutOfRangeError(f"alpha must be in [0, 1], got {alpha}")
        if alpha == 0.0:
            return
        v = self.values
        neighbor_sum = (
            np.roll(v, 1, axis=0)
            + np.roll(v, -1, axis=0)
            + np.roll(v, 1, axis=1)
            + np.roll(v, -1, axis=1)
        )
        self.values = (1.0 - alpha) * v + (alpha / 4.0) * neighbor_sum


def make_rng(seed: int) -> np.random.Generator:
    """One deterministic pseudo-random stream per experiment seed."""
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Derive ``n`` independent child seeds from one experiment seed.

    Uses numpy's SeedSequence spawning, so the derivation is deterministic
    and collision-resistant across the ensemble.
    """
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]
