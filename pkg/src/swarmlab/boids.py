"""Reynolds-style flocking on a continuous toroidal world.

Three local steering rules (separation, alignment, cohesion) plus
inverse-distance obstacle repulsion. The step is semi-implicit Euler:
velocity updates first (clamped to v_max), then position, and all
boids read the same old snapshot.

:func:`steer` is the per-boid reference law; :func:`flock_step` is the
vectorized twin used for whole-flock updates and is tested for equality
against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BoidParams:
    r_sep: float = 2.0
    r_neigh: float = 18.0
    w_sep: float = 0.6
    w_align: float = 0.12
    w_coh: float = 0.05
    v_max: float = 1.2
    world: tuple[float, float] = (60.0, 60.0)

    def __post_init__(self) -> None:
        if self.r_sep <= 0 or self.r_neigh < self.r_sep:
            raise ValueError("need 0 < r_sep <= r_neigh")
        if min(self.w_sep, self.w_align, self.w_coh) < 0:
            raise ValueError("steering weights must be >= 0")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")
        if min(self.world) <= 0:
            raise ValueError("world extent must be positive")


@dataclass
class Boid:
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self) -> None:
        self.pos = np.asarray(self.pos, dtype=np.float64)
        self.vel = np.asarray(self.vel, dtype=np.float64)


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]
    radius: float
    w_avoid: float = 8.0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("obstacle radius must be > 0")
        if self.w_avoid < 0:
            raise ValueError("w_avoid must be >= 0")


def toroidal_delta(frm: np.ndarray, to: np.ndarray, world: tuple[float, float]) -> np.ndarray:
    """Minimal-image displacement vector(s) from ``frm`` to ``to``."""
    w = np.asarray(world, dtype=np.float64)
    return (np.asarray(to) - np.asarray(frm) + w / 2.0) % w - w / 2.0


def toroidal_distance(a: np.ndarray, b: np.ndarray, world: tuple[float, float]) -> float:
    return float(np.linalg.norm(toroidal_delta(a, b, world)))


def wrap_position(pos: np.ndarray, world: tuple[float, float]) -> np.ndarray:
    return pos % np.asarray(world, dtype=np.float64)


def steer(
    b: Boid, neighbors: Sequence[Boid], obstacles: Sequence[Obstacle], p: BoidParams
) -> np.ndarray:
    """Per-boid steering acceleration.

    ``neighbors`` must be exactly the boids within r_neigh of ``b``
    (toroidal metric), excluding ``b`` itself.
    """
    acc = np.zeros(2)
    if neighbors:
        sep = np.zeros(2)
        mean_vel = np.zeros(2)
        mean_disp = np.zeros(2)
        for other in neighbors:
            disp = toroidal_delta(b.pos, other.pos, p.world)
            d = np.linalg.norm(disp)
            if 0.0 < d < p.r_sep:
                sep -= disp / d
            mean_vel += other.vel
            mean_disp += disp
        mean_vel /= len(neighbors)
        mean_disp /= len(neighbors)
        acc += p.w_sep * sep
        acc += p.w_align * (mean_vel - b.vel)
        acc += p.w_coh * mean_disp
    for obs in obstacles:
        disp = toroidal_delta(b.pos, np.asarray(obs.center), p.world)
        d = np.linalg.norm(disp)
        if 0.0 < d < 2.0 * obs.radius:
            acc -= obs.w_avoid * disp / (d * d)
    return acc


def neighbors_of(boids: Sequence[Boid], i: int, p: BoidParams) -> list[Boid]:
    """Boids within r_neigh of boid ``i`` (toroidal), excluding itself."""
    out = []
    for j, other in enumerate(boids):
        if j == i:
            continue
        if toroidal_distance(boids[i].pos, other.pos, p.world) <= p.r_neigh:
            out.append(other)
    return out


def _pairwise(pos: np.ndarray, world: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    disp = toroidal_delta(pos[:, None, :], pos[None, :, :], world)
    dist = np.linalg.norm(disp, axis=2)
    return disp, dist


def flock_accelerations(
    pos: np.ndarray, vel: np.ndarray, obstacles: Sequence[Obstacle], p: BoidParams
) -> np.ndarray:
    """Vectorized steering for every boid from one snapshot."""
    n = pos.shape[0]
    acc = np.zeros((n, 2))
    if n > 1:
        disp, dist = _pairwise(pos, p.world)
        off_diag = ~np.eye(n, dtype=bool)
        neigh = off_diag & (dist <= p.r_neigh)
        counts = neigh.sum(axis=1)
        has = counts > 0

        sep_mask = neigh & (dist < p.r_sep) & (dist > 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(dist[..., None] > 0, disp / dist[..., None], 0.0)
        acc += p.w_sep * -(unit * sep_mask[..., None]).sum(axis=1)

        safe_counts = np.maximum(counts, 1)[:, None]
        mean_vel = (vel[None, :, :] * neigh[..., None]).sum(axis=1) / safe_counts
        mean_disp = (disp * neigh[..., None]).sum(axis=1) / safe_counts
        acc += np.where(has[:, None], p.w_align * (mean_vel - vel), 0.0)
        acc += np.where(has[:, None], p.w_coh * mean_disp, 0.0)
    for obs in obstacles:
        disp_o = toroidal_delta(pos, np.asarray(obs.center), p.world)
        d = np.linalg.norm(disp_o, axis=1)
        active = (d > 0) & (d < 2.0 * obs.radius)
        with np.errstate(invalid="ignore", divide="ignore"):
            term = np.where(active[:, None], -obs.w_avoid * disp_o / (d * d)[:, None], 0.0)
        acc += term
    return acc


def clamp_speed(vel: np.ndarray, v_max: float) -> np.ndarray:
    speed = np.linalg.norm(vel, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(speed > v_max, v_max / speed, 1.0)
    return vel * scale


def flock_step(
    boids: Sequence[Boid], obstacles: Sequence[Obstacle], p: BoidParams, dt: float
) -> list[Boid]:
    """Advance every boid one step from the common old snapshot."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not boids:
        return []
    pos = np.stack([b.pos for b in boids])
    vel = np.stack([b.vel for b in boids])
    new_pos, new_vel = flock_step_arrays(pos, vel, obstacles, p, dt)
    return [Boid(new_pos[i].copy(), new_vel[i].copy()) for i in range(len(boids))]


def flock_step_arrays(
    pos: np.ndarray,
    vel: np.ndarray,
    obstacles: Sequence[Obstacle],
    p: BoidParams,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    acc = flock_accelerations(pos, vel, obstacles, p)
    new_vel = clamp_speed(vel + dt * acc, p.v_max)
    new_pos = wrap_position(pos + dt * new_vel, p.world)
    return new_pos, new_vel


def subflock_count(
    boids: Sequence[Boid] | np.ndarray, link_radius: float, world: tuple[float, float]
) -> int:
    """Connected components of the within-link_radius graph (toroidal)."""
    if link_radius <= 0:
        raise ValueError("link_radius must be > 0")
    if isinstance(boids, np.ndarray):
        pos = boids
    else:
        if not boids:
            return 0
        pos = np.stack([b.pos for b in boids])
    n = pos.shape[0]
    if n == 0:
        return 0
    _, dist = _pairwise(pos, world)
    adj = dist <= link_radius
    seen = np.zeros(n, dtype=bool)
    components = 0
    for start in range(n):
        if seen[start]:
            continue
        components += 1
        stack = [start]
        seen[start] = True
        while stack:
            cur = stack.pop()
            for nxt in np.flatnonzero(adj[cur] & ~seen):
                seen[nxt] = True
                stack.append(int(nxt))
    return components


def toroidal_centroid(pos: np.ndarray, world: tuple[float, float]) -> np.ndarray:
    """Circular-mean centroid of points on the torus."""
    w = np.asarray(world, dtype=np.float64)
    theta = pos / w * 2.0 * np.pi
    angle = np.arctan2(np.sin(theta).mean(axis=0), np.cos(theta).mean(axis=0))
    return (angle % (2.0 * np.pi)) / (2.0 * np.pi) * w


def centroid_msd(pos: np.ndarray, world: tuple[float, float]) -> float:
    """Mean squared toroidal distance of the points to their centroid."""
    c = toroidal_centroid(pos, world)
    delta = toroidal_delta(pos, c, world)
    return float((delta**2).sum(axis=1).mean())
