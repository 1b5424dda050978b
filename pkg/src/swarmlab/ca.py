"""Cellular automata over toroidal lattices with synchronous table updates.

A rule table is a total mapping from neighborhood configurations to the
next cell state. Configurations are encoded mixed-radix: with offsets
``(o_0, ..., o_{a-1})`` (the first offset most significant) and ``k``
states, a neighborhood reading ``(s_0, ..., s_{a-1})`` indexes the flat
table at ``sum(s_i * k**(a-1-i))``. Elementary (1D, radius 1, binary)
rules use offsets ``(-1, 0), (0, 0), (1, 0)``, so the reading
``(l, c, r)`` lands on index ``4l + 2c + r`` and the table of rule ``n``
is simply the bits of ``n``: the standard numbering.

GA chromosomes address tables through this same flat encoding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import Coord, TorusDims


class DimensionMismatchError(ValueError):
    """State alphabet or shape incompatible with the rule table."""


ELEMENTARY_OFFSETS: tuple[Coord, ...] = ((-1, 0), (0, 0), (1, 0))

# Moore radius-1 with self, row-major: the 2D genotype layout.
MOORE_SELF_OFFSETS: tuple[Coord, ...] = tuple(
    (dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)
)


@dataclass(frozen=True)
class RuleTable:
    """Total transition table for a k-state automaton.

    Attributes:
        states: Number of cell states k (>= 2).
        offsets: Neighborhood offsets (dx, dy) in encoding order,
            most significant first; includes the cell itself.
        table: Flat array of k**arity next-state entries.
    """

    states: int
    offsets: tuple[Coord, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        if self.states < 2:
            raise ValueError(f"need k >= 2 states, got {self.states}")
        object.__setattr__(self, "table", np.asarray(self.table, dtype=np.int64))
        expected = self.states**self.arity
        if self.table.shape != (expected,):
            raise ValueError(f"table must have {expected} entries, got {self.table.shape}")
        if self.table.min() < 0 or self.table.max() >= self.states:
            raise ValueError("table outputs must lie in 0..k-1")

    @property
    def arity(self) -> int:
        return len(self.offsets)

    @classmethod
    def from_function(
        cls, states: int, offsets: Sequence[Coord], fn: Callable[[tuple[int, ...]], int]
    ) -> "RuleTable":
        """Build a table by evaluating ``fn`` on every neighborhood reading."""
        arity = len(offsets)
        table = np.empty(states**arity, dtype=np.int64)
        for idx in range(table.size):
            reading = []
            rest = idx
            for pos in range(arity):
                power = states ** (arity - 1 - pos)
                reading.append(rest // power)
                rest %= power
            table[idx] = fn(tuple(reading))
        return cls(states=states, offsets=tuple(offsets), table=table)


def rule_from_number(n: int) -> RuleTable:
    """Elementary rule ``n``: neighborhood (l, c, r) maps to bit 4l+2c+r of n."""
    if not 0 <= n <= 255:
        raise ValueError(f"elementary rule number must be in 0..255, got {n}")
    table = np.array([(n >> idx) & 1 for idx in range(8)], dtype=np.int64)
    return RuleTable(states=2, offsets=ELEMENTARY_OFFSETS, table=table)


def rule_to_number(rule: RuleTable) -> int:
    """Inverse of :func:`rule_from_number` for elementary tables."""
    if rule.states != 2 or rule.offsets != ELEMENTARY_OFFSETS:
        raise ValueError("not an elementary radius-1 binary rule")
    return int(sum(int(bit) << idx for idx, bit in enumerate(rule.table)))


@dataclass
class CAState:
    """Lattice of cell states; 1xN dims give a 1D automaton."""

    dims: TorusDims
    cells: np.ndarray

    def __post_init__(self) -> None:
        self.cells = np.asarray(self.cells, dtype=np.int64)
        if self.cells.shape != (self.dims.height, self.dims.width):
            raise ValueError(
                f"cells shape {self.cells.shape} does not match dims "
                f"{self.dims.height}x{self.dims.width}"
            )

    @classmethod
    def line(cls, values: Sequence[int]) -> "CAState":
        """1D state from a sequence of cell values."""
        row = np.asarray(values, dtype=np.int64)
        return cls(TorusDims(width=row.size, height=1), row.reshape(1, -1))

    @classmethod
    def single_one(cls, width: int) -> "CAState":
        """1D all-zero state with a single 1 at the center cell."""
        row = np.zeros(width, dtype=np.int64)
        row[width // 2] = 1
        return cls(TorusDims(width=width, height=1), row.reshape(1, -1))

    def row(self) -> np.ndarray:
        return self.cells[0]

    def copy(self) -> "CAState":
        return CAState(self.dims, self.cells.copy())


def ca_step(state: CAState, rule: RuleTable) -> CAState:
    """One synchronous update: every cell reads the old lattice.

    Raises DimensionMismatchError if any cell value falls outside the
    rule's alphabet.
    """
    cells = state.cells
    if cells.max(initial=0) >= rule.states or cells.min(initial=0) < 0:
        raise DimensionMismatchError(
            f"state contains values outside the rule alphabet 0..{rule.states - 1}"
        )
    index = np.zeros_like(cells)
    for dx, dy in rule.offsets:
        # np.roll(-dy, -dx) places the value of the (dx, dy) neighbor at each cell
        index = index * rule.states + np.roll(cells, (-dy, -dx), axis=(0, 1))
    return CAState(state.dims, rule.table[index])


def ca_run(state: CAState, rule: RuleTable, steps: int) -> list[CAState]:
    """Trajectory [s_0, ..., s_steps] with s_0 the given state."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    trajectory = [state.copy()]
    for _ in range(steps):
        trajectory.append(ca_step(trajectory[-1], rule))
    return trajectory


def trajectory_grey(trajectory: Sequence[CAState]) -> np.ndarray:
    """Stack a 1D trajectory into a 2D grey image, one row per time step."""
    if any(s.dims.height != 1 for s in trajectory):
        raise ValueError("stacked rendering is defined for 1D trajectories")
    k = max(2, int(max(s.cells.max() for s in trajectory)) + 1)
    rows = np.vstack([s.row() for s in trajectory])
    return (rows * (255 // (k - 1))).astype(np.int64)
