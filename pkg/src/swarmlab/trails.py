"""Memoryless trail-laying colonies over grey-level image habitats.

Each ant is a bare position. Per step it samples one of its 8 Moore
neighbors with weight ``W(sigma) = (1 + sigma / (1 + delta * sigma))**beta``
(sigma = that neighbor's pheromone), moves there, and deposits
``eta + gamma * grey(new) / 255``; the field then evaporates once. The
grey coupling makes the image the colony's playground: trails condense
onto bright structure, and the normalized field is the colony's
cognitive map.

The habitat-swap experiment measures the colony's environmental memory:
convergence toward a habitat's reference map is compared between a
fresh start and a start from a field trained on a different habitat
(the "résistance" effect).

Ants within one step see deposits made earlier in the same step
(sequential, ant-index order), which keeps the kernel single-pass and
the runs replayable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .accel import njit
from .clustering import MOORE_DX, MOORE_DY
from .grid import PheromoneField, TorusDims
from .metrics import pearson


@dataclass(frozen=True)
class TrailParams:
    """Colony constants; calibration values recorded here, not claimed."""

    n_ants: int = 128
    beta: float = 3.5
    delta: float = 0.2
    eta: float = 0.07
    gamma: float = 1.0
    rho: float = 0.015

    def __post_init__(self) -> None:
        if self.n_ants < 0:
            raise ValueError("n_ants must be >= 0")
        if self.beta < 0 or self.delta < 0 or self.gamma < 0:
            raise ValueError("beta, delta, gamma must be >= 0")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must be in [0, 1]")


@dataclass
class ImageHabitat:
    """Grey levels 0..255 per cell, used as deposit coupling."""

    dims: TorusDims
    grey: np.ndarray

    def __post_init__(self) -> None:
        self.grey = np.asarray(self.grey, dtype=np.int64)
        if self.grey.shape != (self.dims.height, self.dims.width):
            raise ValueError(
                f"grey shape {self.grey.shape} != {self.dims.height}x{self.dims.width}"
            )
        if self.grey.min() < 0 or self.grey.max() > 255:
            raise ValueError("grey levels must lie in 0..255")

    @classmethod
    def from_grey(cls, grey: np.ndarray) -> "ImageHabitat":
        grey = np.asarray(grey)
        return cls(TorusDims(grey.shape[1], grey.shape[0]), grey)

    @classmethod
    def flat(cls, dims: TorusDims, level: int = 0) -> "ImageHabitat":
        return cls(dims, np.full((dims.height, dims.width), level, dtype=np.int64))


def transition_weights(sigma: np.ndarray, p: TrailParams) -> np.ndarray:
    """W(sigma) = (1 + sigma / (1 + delta * sigma))**beta, elementwise."""
    sigma = np.asarray(sigma, dtype=np.float64)
    return (1.0 + sigma / (1.0 + p.delta * sigma)) ** p.beta


def transition_distribution(
    pos: tuple[int, int], field: PheromoneField, p: TrailParams
) -> np.ndarray:
    """Probabilities over the 8 Moore neighbors (row-major offset order)."""
    x, y = pos
    w, h = field.dims.width, field.dims.height
    sigma = np.array(
        [field.values[(y + dy) % h, (x + dx) % w] for dx, dy in zip(MOORE_DX, MOORE_DY)]
    )
    weights = transition_weights(sigma, p)
    return weights / weights.sum()


def random_ants(n: int, dims: TorusDims, rng: np.random.Generator) -> np.ndarray:
    """(n, 2) int64 ant positions as (x, y), uniform over the torus."""
    return np.stack(
        [rng.integers(dims.width, size=n), rng.integers(dims.height, size=n)], axis=1
    ).astype(np.int64)


@njit
def _colony_chunk(field, grey_norm, ant_xy, uniforms, beta, delta, eta, gamma, rho, ref, corr_out):
    h, w = field.shape
    steps, n_ants = uniforms.shape
    keep = 1.0 - rho
    weights = np.empty(8)
    use_ref = ref.size == field.size
    # statistics via explicit scalar loops: the jitted and interpreted
    # backends then accumulate in the same order and stay bit-identical
    ref_mean = 0.0
    ref_dev = 0.0
    if use_ref:
        acc = 0.0
        for i in range(h):
            for j in range(w):
                acc += ref[i, j]
        ref_mean = acc / (h * w)
        acc = 0.0
        for i in range(h):
            for j in range(w):
                dr = ref[i, j] - ref_mean
                acc += dr * dr
        ref_dev = math.sqrt(acc)
    for t in range(steps):
        for a in range(n_ants):
            x = ant_xy[a, 0]
            y = ant_xy[a, 1]
            total = 0.0
            for k in range(8):
                nx = (x + MOORE_DX[k]) % w
                ny = (y + MOORE_DY[k]) % h
                sigma = field[ny, nx]
                wgt = (1.0 + sigma / (1.0 + delta * sigma)) ** beta
                total += wgt
                weights[k] = total
            r = uniforms[t, a] * total
            pick = 7
            for k in range(8):
                if r < weights[k]:
                    pick = k
                    break
            x = (x + MOORE_DX[pick]) % w
            y = (y + MOORE_DY[pick]) % h
            ant_xy[a, 0] = x
            ant_xy[a, 1] = y
            field[y, x] += eta + gamma * grey_norm[y, x]
        for i in range(h):
            for j in range(w):
                field[i, j] *= keep
        if use_ref and ref_dev > 0.0:
            acc = 0.0
            for i in range(h):
                for j in range(w):
                    acc += field[i, j]
            f_mean = acc / (h * w)
            num = 0.0
            f_sq = 0.0
            for i in range(h):
                for j in range(w):
                    df = field[i, j] - f_mean
                    num += df * (ref[i, j] - ref_mean)
                    f_sq += df * df
            if f_sq > 0.0:
                corr_out[t] = num / (math.sqrt(f_sq) * ref_dev)
            else:
                corr_out[t] = np.nan
        elif use_ref:
            corr_out[t] = np.nan


_EMPTY_REF = np.empty((0, 0), dtype=np.float64)  # 2D so kernel typing stays stable

# steps per pre-drawn random block, as in the clustering kernel
CHUNK_STEPS = 2048


def colony_run(
    ants: np.ndarray,
    field: PheromoneField,
    habitat: ImageHabitat,
    p: TrailParams,
    steps: int,
    rng: np.random.Generator,
    reference: np.ndarray | None = None,
) -> np.ndarray | None:
    """Advance the colony ``steps`` steps in place.

    With ``reference`` given, returns the per-step Pearson correlation
    between the field and the reference (length ``steps``); correlation
    against the normalized cognitive map is identical because Pearson
    ignores positive rescaling.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if habitat.dims != field.dims:
        raise ValueError("habitat and field dims differ")
    grey_norm = habitat.grey.astype(np.float64) / 255.0
    if reference is not None:
        ref = np.ascontiguousarray(reference, dtype=np.float64).reshape(
            field.values.shape
        )
        corr = np.full(steps, np.nan)
    else:
        ref = _EMPTY_REF
        corr = np.empty(0)
    done = 0
    while done < steps:
        chunk = min(CHUNK_STEPS, steps - done)
        uniforms = rng.random((chunk, ants.shape[0]))
        _colony_chunk(
            field.values,
            grey_norm,
            ants,
            uniforms,
            p.beta,
            p.delta,
            p.eta,
            p.gamma,
            p.rho,
            ref,
            corr[done : done + chunk] if reference is not None else np.empty(0),
        )
        done += chunk
    return corr if reference is not None else None


def colony_step(
    ants: np.ndarray,
    field: PheromoneField,
    habitat: ImageHabitat,
    p: TrailParams,
    rng: np.random.Generator,
) -> None:
    """One step: every ant moves and deposits, then one evaporation."""
    uniforms = rng.random((1, ants.shape[0]))
    grey_norm = habitat.grey.astype(np.float64) / 255.0
    _colony_chunk(
        field.values,
        grey_norm,
        ants,
        uniforms,
        p.beta,
        p.delta,
        p.eta,
        p.gamma,
        p.rho,
        _EMPTY_REF,
        np.empty(0),
    )


def cognitive_map(field: PheromoneField) -> np.ndarray:
    """Field normalized by its maximum; all zeros stay all zeros."""
    m = field.values.max()
    if m <= 0:
        return np.zeros_like(field.values)
    return field.values / m


def convergence_time(
    trace: Sequence[np.ndarray], reference: np.ndarray, threshold: float
) -> int | None:
    """First index whose map correlates with the reference at >= threshold.

    ``trace`` is a sequence of fields or maps (index 0 = initial state);
    returns None when no element crosses the threshold.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    ref = np.asarray(reference, dtype=np.float64)
    for step, snapshot in enumerate(trace):
        values = snapshot.values if isinstance(snapshot, PheromoneField) else snapshot
        corr = pearson(values, ref)
        if corr is not None and corr >= threshold:
            return step
    return None


def first_crossing(corr_trace: np.ndarray, threshold: float) -> int | None:
    """Index of the first correlation >= threshold, or None (NaNs never cross)."""
    hits = np.flatnonzero(corr_trace >= threshold)
    return int(hits[0]) if hits.size else None


@dataclass
class SwapResult:
    """Paired convergence statistics from the habitat-swap experiment."""

    fresh_times: list[int | None]
    trained_times: list[int | None]
    resistance_fraction: float
    threshold: float

    def pairs(self) -> list[tuple[float, float]]:
        inf = float("inf")
        return [
            (inf if f is None else float(f), inf if t is None else float(t))
            for f, t in zip(self.fresh_times, self.trained_times)
        ]


def habitat_swap_experiment(
    habitat_a: ImageHabitat,
    habitat_b: ImageHabitat,
    p: TrailParams,
    steps_per_phase: int,
    seeds: Sequence[int],
    threshold: float = 0.85,
) -> SwapResult:
    """Measure memory of habitat A as slowed convergence on habitat B.

    Per seed: (i) run on B from an empty field and record when the field
    first correlates with B's reference map at >= threshold; (ii) train
    on A for steps_per_phase, swap to B, and record the same. The
    reference is the seed-ensemble mean cognitive map after a long run
    on B (independent sub-seeds). Returns the paired times and the
    fraction of pairs where the trained start is no faster; a run that
    never converges counts as infinitely slow.
    """
    if habitat_a.dims != habitat_b.dims:
        raise ValueError("habitats must share dimensions")
    if not seeds:
        return SwapResult([], [], float("nan"), threshold)

    reference = ensemble_reference(habitat_b, p, steps_per_phase, seeds)

    fresh_times: list[int | None] = []
    trained_times: list[int | None] = []
    no_faster = 0
    for seed in seeds:
        fresh_rng, train_rng, swap_rng = _phase_rngs(seed)

        field = PheromoneField.zeros(habitat_b.dims)
        ants = random_ants(p.n_ants, habitat_b.dims, fresh_rng)
        corr0 = pearson(field.values, reference)
        trace = colony_run(ants, field, habitat_b, p, steps_per_phase, fresh_rng, reference)
        fresh = _time_with_initial(corr0, trace, threshold)
        fresh_times.append(fresh)

        field = PheromoneField.zeros(habitat_a.dims)
        ants = random_ants(p.n_ants, habitat_a.dims, train_rng)
        colony_run(ants, field, habitat_a, p, steps_per_phase, train_rng)
        # only the field carries over: the colony's memory lives in the
        # environment, so ant positions are re-seeded for the new habitat
        ants = random_ants(p.n_ants, habitat_b.dims, swap_rng)
        corr0 = pearson(field.values, reference)
        trace = colony_run(ants, field, habitat_b, p, steps_per_phase, swap_rng, reference)
        trained = _time_with_initial(corr0, trace, threshold)
        trained_times.append(trained)

        f = math.inf if fresh is None else fresh
        t = math.inf if trained is None else trained
        # non-convergence counts as infinitely slow; inf >= inf means
        # "trained was not faster", which is what the memory claim needs
        if t >= f:
            no_faster += 1
    return SwapResult(fresh_times, trained_times, no_faster / len(seeds), threshold)


def ensemble_reference(
    habitat: ImageHabitat, p: TrailParams, steps: int, seeds: Sequence[int]
) -> np.ndarray:
    """Mean cognitive map over fresh runs with sub-seeds derived per seed."""
    acc = np.zeros((habitat.dims.height, habitat.dims.width))
    for seed in seeds:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        field = PheromoneField.zeros(habitat.dims)
        ants = random_ants(p.n_ants, habitat.dims, rng)
        colony_run(ants, field, habitat, p, steps, rng)
        acc += cognitive_map(field)
    return acc / len(seeds)


def _phase_rngs(seed: int):
    return (
        np.random.default_rng(np.random.SeedSequence([seed, 1])),
        np.random.default_rng(np.random.SeedSequence([seed, 2])),
        np.random.default_rng(np.random.SeedSequence([seed, 3])),
    )


def _time_with_initial(corr0: float | None, trace: np.ndarray, threshold: float) -> int | None:
    if corr0 is not None and corr0 >= threshold:
        return 0
    hit = first_crossing(trace, threshold)
    return None if hit is None else hit + 1


def two_blob_habitat(dims: TorusDims, level: int = 255) -> ImageHabitat:
    """Two bright Gaussian blobs on a dark background."""
    yy, xx = np.mgrid[0 : dims.height, 0 : dims.width]
    cx1, cy1 = dims.width * 0.28, dims.height * 0.30
    cx2, cy2 = dims.width * 0.72, dims.height * 0.70
    s = min(dims.width, dims.height) / 8.0
    blob1 = np.exp(-((xx - cx1) ** 2 + (yy - cy1) ** 2) / (2 * s * s))
    blob2 = np.exp(-((xx - cx2) ** 2 + (yy - cy2) ** 2) / (2 * s * s))
    combined = np.clip(blob1 + blob2, 0.0, 1.0)
    grey = np.rint(combined / combined.max() * level).astype(np.int64)
    return ImageHabitat(dims, grey)


def stripe_habitat(dims: TorusDims, period: int | None = None, level: int = 255) -> ImageHabitat:
    """Vertical bright/dark stripes."""
    if period is None:
        period = max(4, dims.width // 8)
    xx = np.arange(dims.width)
    stripe = ((xx // (period // 2)) % 2 == 0).astype(np.float64)
    grey = np.rint(np.tile(stripe, (dims.height, 1)) * level).astype(np.int64)
    return ImageHabitat(dims, grey)
