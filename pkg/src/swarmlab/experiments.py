"""Canonical seeded experiment recipes.

These are the calibrated scenario definitions the CLI and the
acceptance suite share. Parameter values here are calibration targets
recorded as configuration, not claims from any source material.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boids import (
    BoidParams,
    Obstacle,
    centroid_msd,
    flock_step_arrays,
    subflock_count,
)
from .clustering import ClusterParams, clustering_run, mean_pairwise_distance, random_world
from .grid import TorusDims
from .trails import (
    SwapResult,
    TrailParams,
    habitat_swap_experiment,
    stripe_habitat,
    two_blob_habitat,
)


@dataclass(frozen=True)
class CohesionScenario:
    """Scattered flock on a square torus; measures contraction of spread."""

    n_boids: int = 50
    steps: int = 500
    params: BoidParams = field(default_factory=BoidParams)

    def initial_state(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        w, h = self.params.world
        pos = rng.random((self.n_boids, 2)) * np.array([w, h])
        angle = rng.random(self.n_boids) * 2.0 * np.pi
        vel = np.stack([np.cos(angle), np.sin(angle)], axis=1) * self.params.v_max * 0.5
        return pos, vel

    def run(self, seed: int, record=None) -> dict:
        rng = np.random.default_rng(seed)
        pos, vel = self.initial_state(rng)
        msd0 = centroid_msd(pos, self.params.world)
        for step in range(self.steps):
            pos, vel = flock_step_arrays(pos, vel, [], self.params, 1.0)
            if record is not None:
                record(step, pos, vel)
        msd_end = centroid_msd(pos, self.params.world)
        return {"msd_initial": msd0, "msd_final": msd_end, "ratio": msd_end / msd0}


@dataclass(frozen=True)
class ObstacleScenario:
    """Compact flock flying into a circular obstacle: split, then re-merge."""

    n_boids: int = 40
    steps: int = 300
    start: tuple[float, float] = (40.0, 30.0)
    spread: float = 6.0
    link_radius: float = 4.0
    obstacle: Obstacle = field(default_factory=lambda: Obstacle((80.0, 30.0), 10.0, 12.0))
    params: BoidParams = field(default_factory=lambda: BoidParams(world=(400.0, 60.0)))

    def initial_state(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        pos = np.asarray(self.start) + rng.normal(0.0, self.spread, (self.n_boids, 2))
        pos %= np.asarray(self.params.world)
        vel = np.tile([self.params.v_max * 0.8, 0.0], (self.n_boids, 1))
        vel += rng.normal(0.0, 0.05, (self.n_boids, 2))
        return pos, vel

    def run(self, seed: int, record=None) -> dict:
        rng = np.random.default_rng(seed)
        pos, vel = self.initial_state(rng)
        counts = []
        for step in range(self.steps):
            pos, vel = flock_step_arrays(pos, vel, [self.obstacle], self.params, 1.0)
            counts.append(subflock_count(pos, self.link_radius, self.params.world))
            if record is not None:
                record(step, pos, vel)
        return {
            "max_subflocks": max(counts),
            "end_subflocks": counts[-1],
            "split_then_merge": max(counts) >= 2 and counts[-1] == 1,
            "counts": counts,
        }


@dataclass(frozen=True)
class ClusteringBenchmark:
    """4-Gaussian clustering benchmark: 200 items sorted by 10 ants.

    The pick/drop constants and similarity scale were calibrated so the
    emergence targets (block-entropy drop and similarity-to-proximity
    correlation gain) hold across seed ensembles at 100k steps.
    """

    grid_side: int = 50
    n_ants: int = 10
    n_items: int = 200
    steps: int = 100_000
    entropy_patch: int = 10
    k1: float = 0.065
    k2: float = 0.384
    s: int = 9
    alpha_scale: float = 1.86

    def build(self, rng: np.random.Generator):
        attrs = gaussian_items(rng, n_items=self.n_items)
        params = ClusterParams(
            dims=TorusDims(self.grid_side, self.grid_side),
            n_ants=self.n_ants,
            alpha_sim=self.alpha_scale * mean_pairwise_distance(attrs),
            k1=self.k1,
            k2=self.k2,
            s=self.s,
        )
        return random_world(attrs, params, rng)

    def run(self, seed: int, metrics_every: int | None = None) -> list[dict]:
        rng = np.random.default_rng(seed)
        world = self.build(rng)
        every = metrics_every if metrics_every is not None else self.steps
        return clustering_run(world, self.steps, rng, metrics_every=every, entropy_patch=self.entropy_patch)


@dataclass(frozen=True)
class SwapScenario:
    """Habitat-swap memory experiment: two-blob habitat against stripes.

    The colony constants here were calibrated so that individual runs
    condense onto habitat structure (fresh starts reliably reach the
    ensemble reference) while the pheromone field retains enough history
    to slow convergence after a habitat change.
    """

    side: int = 64
    steps_per_phase: int = 2000
    threshold: float = 0.8
    params: TrailParams = field(
        default_factory=lambda: TrailParams(n_ants=768, beta=1.2, eta=0.02)
    )

    def habitats(self):
        dims = TorusDims(self.side, self.side)
        return two_blob_habitat(dims), stripe_habitat(dims)

    def run(self, seeds) -> SwapResult:
        blob, stripes = self.habitats()
        return habitat_swap_experiment(
            blob, stripes, self.params, self.steps_per_phase, seeds, self.threshold
        )

    def run_control(self, seeds) -> SwapResult:
        """Identical habitats on both phases: training helps, never hinders."""
        _, stripes = self.habitats()
        return habitat_swap_experiment(
            stripes, stripes, self.params, self.steps_per_phase, seeds, self.threshold
        )


def gaussian_items(
    rng: np.random.Generator,
    n_items: int = 200,
    n_clusters: int = 4,
    dim: int = 2,
    separation: float = 4.0,
    std: float = 0.35,
) -> np.ndarray:
    """Synthetic attribute vectors drawn from well-separated Gaussians.

    Cluster means sit on the corners of a hypercube scaled by
    ``separation``; items are assigned round-robin so counts are equal.
    """
    means = []
    for c in range(n_clusters):
        corner = [(c >> b) & 1 for b in range(dim)]
        means.append(np.array(corner, dtype=np.float64) * separation)
    attrs = np.empty((n_items, dim))
    for i in range(n_items):
        attrs[i] = means[i % n_clusters] + rng.normal(0.0, std, dim)
    return attrs
