"""Ant-system tour construction for small symmetric TSP instances.

Classic variant: every ant deposits on its tour each iteration, trails
evaporate multiplicatively, and the positive feedback concentrates
probability mass on short tours. A pheromone floor keeps the
construction probabilities from collapsing numerically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

# visibility assigned to zero-distance city pairs
ZERO_DISTANCE_VISIBILITY = 1e12


class NotAPermutationError(ValueError):
    """Tour order is not a permutation of the cities."""


@dataclass(frozen=True)
class TspInstance:
    dist: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.dist, dtype=np.float64)
        object.__setattr__(self, "dist", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"distance matrix must be square, got {d.shape}")
        if not np.allclose(d, d.T):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix must have a zero diagonal")
        if np.any(d < 0):
            raise ValueError("distances must be non-negative")

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @classmethod
    def from_coords(cls, coords: np.ndarray) -> "TspInstance":
        coords = np.asarray(coords, dtype=np.float64)
        diff = coords[:, None, :] - coords[None, :, :]
        return cls(np.sqrt((diff**2).sum(axis=2)))


@dataclass(frozen=True)
class AcoParams:
    alpha: float = 1.0
    beta_vis: float = 2.0
    rho: float = 0.1
    q_deposit: float = 1.0
    n_ants: int = 20
    tau0: float = 1.0
    tau_min: float = 1e-9

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta_vis < 0:
            raise ValueError("exponents must be >= 0")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if self.q_deposit <= 0 or self.tau0 <= 0:
            raise ValueError("q_deposit and tau0 must be > 0")
        if self.n_ants < 1:
            raise ValueError("need at least one ant")
        if self.tau_min < 0:
            raise ValueError("tau_min must be >= 0")


@dataclass
class Tour:
    order: list[int]
    length: float


def tour_length(order: list[int], inst: TspInstance) -> float:
    """Cyclic tour length including the closing edge."""
    if sorted(order) != list(range(inst.n)):
        raise NotAPermutationError(f"{order} is not a permutation of 0..{inst.n - 1}")
    if inst.n == 1:
        return 0.0
    total = 0.0
    for i in range(len(order)):
        total += inst.dist[order[i], order[(i + 1) % len(order)]]
    return float(total)


def initial_pheromone(inst: TspInstance, params: AcoParams) -> np.ndarray:
    tau = np.full((inst.n, inst.n), params.tau0, dtype=np.float64)
    np.fill_diagonal(tau, 0.0)
    return tau


def _visibility(inst: TspInstance) -> np.ndarray:
    with np.errstate(divide="ignore"):
        vis = np.where(inst.dist > 0, 1.0 / np.maximum(inst.dist, 1e-300), ZERO_DISTANCE_VISIBILITY)
    np.fill_diagonal(vis, 0.0)
    return vis


def construct_tour(
    inst: TspInstance, tau: np.ndarray, params: AcoParams, rng: np.random.Generator
) -> Tour:
    """Build one tour: uniform start, then tau^alpha * visibility^beta sampling."""
    n = inst.n
    if n == 1:
        return Tour([0], 0.0)
    vis = _visibility(inst)
    weights_all = (tau**params.alpha) * (vis**params.beta_vis)
    current = int(rng.integers(n))
    order = [current]
    unvisited = np.ones(n, dtype=bool)
    unvisited[current] = False
    for _ in range(n - 1):
        w = weights_all[current] * unvisited
        total = w.sum()
        if total <= 0:
            # all candidate weights vanished; fall back to uniform over unvisited
            w = unvisited.astype(np.float64)
            total = w.sum()
        nxt = int(rng.choice(n, p=w / total))
        order.append(nxt)
        unvisited[nxt] = False
        current = nxt
    return Tour(order, tour_length(order, inst))


def update_pheromone(tau: np.ndarray, tours: list[Tour], params: AcoParams) -> np.ndarray:
    """Evaporate to the floor, then deposit q/length on every used edge."""
    tau = np.maximum(params.tau_min, (1.0 - params.rho) * tau)
    for tour in tours:
        if tour.length <= 0 or len(tour.order) < 2:
            continue
        gain = params.q_deposit / tour.length
        k = len(tour.order)
        for i in range(k):
            a, b = tour.order[i], tour.order[(i + 1) % k]
            tau[a, b] += gain
            tau[b, a] += gain
    return tau


@dataclass
class AcoResult:
    best: Tour
    trace: list[float] = field(default_factory=list)  # best-so-far per iteration


def solve(inst: TspInstance, params: AcoParams, iterations: int, seed: int) -> AcoResult:
    """Iterate construct-then-update, tracking the best tour ever seen."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    tau = initial_pheromone(inst, params)
    best: Tour | None = None
    trace: list[float] = []
    for _ in range(iterations):
        tours = [construct_tour(inst, tau, params, rng) for _ in range(params.n_ants)]
        for t in tours:
            if best is None or t.length < best.length:
                best = Tour(list(t.order), t.length)
        tau = update_pheromone(tau, tours, params)
        trace.append(best.length)
    assert best is not None
    return AcoResult(best=best, trace=trace)


def brute_force_optimum(inst: TspInstance) -> float:
    """Exhaustive oracle: enumerate all tours with city 0 fixed."""
    n = inst.n
    if n <= 2:
        return tour_length(list(range(n)), inst)
    best = np.inf
    for perm in itertools.permutations(range(1, n)):
        best = min(best, tour_length([0, *perm], inst))
    return float(best)
