"""Ant-based clustering of attribute-vector items on a toroidal grid.

Memoryless ants random-walk over the lattice, picking up items that sit
among dissimilar surroundings and dropping them where the local patch
is similar (squared-threshold pick/drop laws). Attribute similarity is
thereby mapped into spatial proximity, which the sameness/neighbourness
correlation and a block entropy make measurable.

The stepping loop is a numba kernel (see :mod:`swarmlab.accel`);
randomness is pre-drawn per chunk from the experiment's generator so
compiled and interpreted backends consume identical streams.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .accel import njit
from .grid import NeighborhoodKind, TorusDims, neighborhood_offsets
from .metrics import pearson, shannon_entropy


class PatchMismatchError(ValueError):
    """Entropy patch size does not divide the grid dimensions."""


class TooFewItemsError(ValueError):
    """Correlation needs at least two placed items."""


_MOORE = neighborhood_offsets(NeighborhoodKind.MOORE, 1)
MOORE_DX = np.array([dx for dx, _ in _MOORE], dtype=np.int64)
MOORE_DY = np.array([dy for _, dy in _MOORE], dtype=np.int64)

# steps drawn per RNG request inside run(); fixed so a run's stream
# depends only on (seed, steps, n_ants)
CHUNK_STEPS = 4096


@dataclass(frozen=True)
class ClusterParams:
    dims: TorusDims
    n_ants: int
    alpha_sim: float
    k1: float = 0.1
    k2: float = 0.15
    s: int = 3

    def __post_init__(self) -> None:
        if self.n_ants < 0:
            raise ValueError("n_ants must be >= 0")
        if self.k1 <= 0 or self.k2 <= 0 or self.alpha_sim <= 0:
            raise ValueError("k1, k2 and alpha_sim must be > 0")
        if self.s < 1 or self.s % 2 == 0:
            raise ValueError(f"perception side s must be odd and >= 1, got {self.s}")


@dataclass
class ClusterWorld:
    """Mutable clustering state: item layout, ant positions, carried items."""

    params: ClusterParams
    attributes: np.ndarray  # (n_items, dim)
    item_grid: np.ndarray  # (h, w) int64; -1 empty, else item index
    ant_pos: np.ndarray  # (n_ants, 2) int64 as (x, y)
    ant_carry: np.ndarray  # (n_ants,) int64; -1 or item index

    def copy(self) -> "ClusterWorld":
        return ClusterWorld(
            self.params,
            self.attributes.copy(),
            self.item_grid.copy(),
            self.ant_pos.copy(),
            self.ant_carry.copy(),
        )

    def carried_count(self) -> int:
        return int((self.ant_carry >= 0).sum())

    def item_positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices and (x, y) positions of items currently on the grid."""
        ys, xs = np.nonzero(self.item_grid >= 0)
        idx = self.item_grid[ys, xs]
        return idx, np.stack([xs, ys], axis=1)


def mean_pairwise_distance(attributes: np.ndarray) -> float:
    """Default similarity scale: mean Euclidean distance over all item pairs."""
    attrs = np.asarray(attributes, dtype=np.float64)
    diff = attrs[:, None, :] - attrs[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    n = attrs.shape[0]
    if n < 2:
        raise TooFewItemsError("need at least 2 items for a distance scale")
    return float(dist[np.triu_indices(n, k=1)].mean())


def random_world(
    attributes: np.ndarray, params: ClusterParams, rng: np.random.Generator
) -> ClusterWorld:
    """Scatter items over distinct cells and ants anywhere, seeded."""
    attrs = np.asarray(attributes, dtype=np.float64)
    n_items = attrs.shape[0]
    cells = params.dims.cell_count
    if n_items > cells:
        raise ValueError(f"{n_items} items cannot fit on {cells} cells")
    item_grid = np.full((params.dims.height, params.dims.width), -1, dtype=np.int64)
    chosen = rng.choice(cells, size=n_items, replace=False)
    item_grid.ravel()[chosen] = np.arange(n_items)
    ant_pos = np.stack(
        [
            rng.integers(params.dims.width, size=params.n_ants),
            rng.integers(params.dims.height, size=params.n_ants),
        ],
        axis=1,
    ).astype(np.int64)
    ant_carry = np.full(params.n_ants, -1, dtype=np.int64)
    return ClusterWorld(params, attrs, item_grid, ant_pos, ant_carry)


def local_similarity(item: int, c: tuple[int, int], world: ClusterWorld) -> float:
    """Average similarity of ``item`` to the other items in the s x s patch at c.

    f = max(0, (1/s^2) * sum_j (1 - d(item, j) / alpha_sim)); the item
    itself is not counted; an empty patch gives 0.
    """
    p = world.params
    half = p.s // 2
    x0, y0 = c
    total = 0.0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            j = world.item_grid[(y0 + dy) % p.dims.height, (x0 + dx) % p.dims.width]
            if j >= 0 and j != item:
                d = float(np.linalg.norm(world.attributes[item] - world.attributes[j]))
                total += 1.0 - d / p.alpha_sim
    f = total / (p.s * p.s)
    return f if f > 0.0 else 0.0


def pick_probability(f: float, params: ClusterParams) -> float:
    """(k1 / (k1 + f))^2 - strictly decreasing in local similarity."""
    if f < 0:
        raise ValueError("similarity must be >= 0")
    return (params.k1 / (params.k1 + f)) ** 2


def drop_probability(f: float, params: ClusterParams) -> float:
    """(f / (k2 + f))^2 - strictly increasing in local similarity."""
    if f < 0:
        raise ValueError("similarity must be >= 0")
    return (f / (params.k2 + f)) ** 2


@njit
def _patch_similarity(item_grid, attrs, x, y, item, half, alpha_sim, s):
    h, w = item_grid.shape
    total = 0.0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            j = item_grid[(y + dy) % h, (x + dx) % w]
            if j >= 0 and j != item:
                d = 0.0
                for k in range(attrs.shape[1]):
                    diff = attrs[item, k] - attrs[j, k]
                    d += diff * diff
                total += 1.0 - math.sqrt(d) / alpha_sim
    f = total / (s * s)
    return f if f > 0.0 else 0.0


@njit
def _cluster_chunk(item_grid, attrs, ant_pos, ant_carry, moves, decisions, k1, k2, alpha_sim, s):
    h, w = item_grid.shape
    steps, n_ants = moves.shape
    half = s // 2
    for t in range(steps):
        for a in range(n_ants):
            m = moves[t, a]
            x = (ant_pos[a, 0] + MOORE_DX[m]) % w
            y = (ant_pos[a, 1] + MOORE_DY[m]) % h
            ant_pos[a, 0] = x
            ant_pos[a, 1] = y
            carry = ant_carry[a]
            if carry < 0:
                item = item_grid[y, x]
                if item >= 0:
                    f = _patch_similarity(item_grid, attrs, x, y, item, half, alpha_sim, s)
                    p = (k1 / (k1 + f)) ** 2
                    if decisions[t, a] < p:
                        ant_carry[a] = item
                        item_grid[y, x] = -1
            else:
                if item_grid[y, x] < 0:
                    f = _patch_similarity(item_grid, attrs, x, y, carry, half, alpha_sim, s)
                    p = (f / (k2 + f)) ** 2
                    if decisions[t, a] < p:
                        item_grid[y, x] = carry
                        ant_carry[a] = -1


class _RandomBlocks:
    """Pre-drawn (moves, decisions) blocks of CHUNK_STEPS steps.

    Drawing always happens in fixed-size blocks, so the random stream a
    run consumes depends only on (seed, steps, n_ants), never on how
    often metrics are sampled.
    """

    def __init__(self, rng: np.random.Generator, n_ants: int) -> None:
        self.rng = rng
        self.n_ants = n_ants
        self._moves = np.empty((0, n_ants), dtype=np.int64)
        self._decisions = np.empty((0, n_ants))
        self._offset = 0

    def take(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Views over up to ``k`` pre-drawn steps (at least 1)."""
        if self._offset >= self._moves.shape[0]:
            self._moves = self.rng.integers(0, 8, size=(CHUNK_STEPS, self.n_ants), dtype=np.int64)
            self._decisions = self.rng.random((CHUNK_STEPS, self.n_ants))
            self._offset = 0
        end = min(self._offset + k, self._moves.shape[0])
        sl = slice(self._offset, end)
        self._offset = end
        return self._moves[sl], self._decisions[sl]


def _apply_steps(world: ClusterWorld, moves: np.ndarray, decisions: np.ndarray) -> None:
    p = world.params
    _cluster_chunk(
        world.item_grid,
        world.attributes,
        world.ant_pos,
        world.ant_carry,
        moves,
        decisions,
        p.k1,
        p.k2,
        p.alpha_sim,
        p.s,
    )


def clustering_step(world: ClusterWorld, rng: np.random.Generator) -> None:
    """Advance every ant once, in ant-index order: move, then pick or drop."""
    p = world.params
    if p.n_ants == 0:
        return
    moves = rng.integers(0, 8, size=(1, p.n_ants), dtype=np.int64)
    decisions = rng.random((1, p.n_ants))
    _apply_steps(world, moves, decisions)


def clustering_run(
    world: ClusterWorld,
    steps: int,
    rng: np.random.Generator,
    metrics_every: int = 0,
    entropy_patch: int = 10,
) -> list[dict]:
    """Run many steps through the kernel, optionally sampling metrics.

    Returns the sampled metrics records: step 0, every ``metrics_every``
    steps, and the final step (empty list when metrics_every=0).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    records: list[dict] = []
    if metrics_every:
        records.append(metrics_record(world, 0, entropy_patch))
    if world.params.n_ants == 0:
        if metrics_every and steps > 0:
            records.append(metrics_record(world, steps, entropy_patch))
        return records
    blocks = _RandomBlocks(rng, world.params.n_ants)
    done = 0
    while done < steps:
        if metrics_every:
            segment = min(metrics_every - (done % metrics_every), steps - done)
        else:
            segment = steps - done
        remaining = segment
        while remaining > 0:
            moves, decisions = blocks.take(remaining)
            _apply_steps(world, moves, decisions)
            remaining -= moves.shape[0]
        done += segment
        if metrics_every:
            records.append(metrics_record(world, done, entropy_patch))
    return records


def metrics_record(world: ClusterWorld, step: int, entropy_patch: int) -> dict:
    idx, pos = world.item_positions()
    if len(idx) >= 2:
        corr = sameness_neighbourness(world.attributes[idx], pos, world.params.dims)
    else:
        corr = None
    return {
        "step": step,
        "entropy": spatial_entropy(world.item_grid, entropy_patch),
        "correlation": corr,
        "carried": world.carried_count(),
    }


def spatial_entropy(item_grid: np.ndarray, patch: int) -> float:
    """Entropy of item counts over patch x patch blocks (natural log)."""
    h, w = item_grid.shape
    if patch < 1 or h % patch or w % patch:
        raise PatchMismatchError(f"patch {patch} must divide grid {w}x{h}")
    occupied = (item_grid >= 0).astype(np.float64)
    blocks = occupied.reshape(h // patch, patch, w // patch, patch).sum(axis=(1, 3))
    return shannon_entropy(blocks)


def sameness_neighbourness(
    attributes: np.ndarray, positions: np.ndarray, dims: TorusDims
) -> float | None:
    """Correlation between pairwise attribute distance and toroidal grid distance.

    None when either distance set has zero variance (the correlation is
    undefined then). Raises TooFewItemsError below 2 items.
    """
    attrs = np.asarray(attributes, dtype=np.float64)
    pos = np.asarray(positions, dtype=np.float64)
    n = attrs.shape[0]
    if n < 2:
        raise TooFewItemsError("need at least 2 placed items")
    iu = np.triu_indices(n, k=1)
    attr_d = np.sqrt(((attrs[:, None, :] - attrs[None, :, :]) ** 2).sum(axis=2))[iu]
    delta = np.abs(pos[:, None, :] - pos[None, :, :])
    span = np.array([dims.width, dims.height], dtype=np.float64)
    delta = np.minimum(delta, span - delta)
    grid_d = np.sqrt((delta**2).sum(axis=2))[iu]
    return pearson(attr_d, grid_d)


def load_items(path) -> tuple[list[str], np.ndarray]:
    """Read a dataset CSV: header with an ``id`` column plus numeric columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise ValueError(f"{path}: dataset CSV needs a header with an 'id' column")
        attr_cols = [c for c in reader.fieldnames if c != "id"]
        ids: list[str] = []
        rows: list[list[float]] = []
        for row in reader:
            ids.append(row["id"])
            rows.append([float(row[c]) for c in attr_cols])
    if not ids:
        raise ValueError(f"{path}: dataset CSV has no rows")
    return ids, np.asarray(rows, dtype=np.float64)


def save_items(path, ids: list[str], attributes: np.ndarray) -> None:
    attrs = np.asarray(attributes)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"a{k}" for k in range(attrs.shape[1])])
        for i, row in zip(ids, attrs):
            writer.writerow([i] + [repr(float(v)) for v in row])


def save_metrics(path: Path, records: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "entropy", "correlation", "carried"])
        for r in records:
            corr = "" if r["correlation"] is None else repr(r["correlation"])
            writer.writerow([r["step"], repr(r["entropy"]), corr, r["carried"]])
