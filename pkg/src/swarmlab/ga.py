"""Generational genetic algorithm over fixed-length bit strings.

Operators: fitness-proportional (roulette) selection with a uniform
fallback when every fitness is zero, one-point crossover, per-bit
mutation, segment inversion, and segment duplication (copy-over,
disabled by default). Tournament selection is available as a config
alternative. The flagship phenotype interpreter evolves elementary
cellular-automaton rule tables against a target trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ca import CAState, RuleTable, ca_run, rule_from_number

Chromosome = np.ndarray  # 1D uint8 array of 0/1


class EmptyPopulationError(ValueError):
    """Selection from an empty population."""


@dataclass(frozen=True)
class GaParams:
    pop_size: int = 50
    pc: float = 0.7
    pm: float = 0.02
    p_inv: float = 0.05
    p_dup: float = 0.0
    elitism: bool = True
    max_gens: int = 200
    selection: str = "roulette"  # or "tournament"
    tournament_k: int = 3

    def __post_init__(self) -> None:
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError(f"pop_size must be even and >= 2, got {self.pop_size}")
        for name in ("pc", "pm", "p_inv", "p_dup"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.max_gens < 1:
            raise ValueError("max_gens must be >= 1")
        if self.selection not in ("roulette", "tournament"):
            raise ValueError(f"unknown selection scheme {self.selection!r}")


def bits_from_string(s: str) -> Chromosome:
    return np.array([int(ch) for ch in s], dtype=np.uint8)


def bits_to_string(c: Chromosome) -> str:
    return "".join(str(int(b)) for b in c)


def roulette_select(
    population: Sequence[Chromosome], fitnesses: Sequence[float], rng: np.random.Generator
) -> Chromosome:
    """Pick one individual with probability proportional to fitness.

    All-zero fitness falls back to a uniform draw.
    """
    if len(population) == 0:
        raise EmptyPopulationError("cannot select from an empty population")
    fit = np.asarray(fitnesses, dtype=np.float64)
    total = fit.sum()
    if total <= 0.0:
        idx = int(rng.integers(len(population)))
    else:
        idx = int(rng.choice(len(population), p=fit / total))
    return population[idx]


def tournament_select(
    population: Sequence[Chromosome], fitnesses: Sequence[float], rng: np.random.Generator, k: int = 3
) -> Chromosome:
    if len(population) == 0:
        raise EmptyPopulationError("cannot select from an empty population")
    contenders = rng.integers(len(population), size=k)
    best = max(contenders, key=lambda i: fitnesses[i])
    return population[int(best)]


def one_point_crossover(a: Chromosome, b: Chromosome, cut: int) -> tuple[Chromosome, Chromosome]:
    """Exchange tails at ``cut``: child1 = a[:cut]+b[cut:], child2 = b[:cut]+a[cut:]."""
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if not 1 <= cut <= a.size - 1:
        raise ValueError(f"cut must be in 1..{a.size - 1}, got {cut}")
    return (
        np.concatenate([a[:cut], b[cut:]]),
        np.concatenate([b[:cut], a[cut:]]),
    )


def mutate(c: Chromosome, pm: float, rng: np.random.Generator) -> Chromosome:
    """Flip each bit independently with probability pm."""
    if not 0.0 <= pm <= 1.0:
        raise ValueError(f"pm must be in [0, 1], got {pm}")
    flips = rng.random(c.size) < pm
    return np.where(flips, 1 - c, c).astype(np.uint8)


def invert_segment(c: Chromosome, i: int, j: int) -> Chromosome:
    """Reverse bits i..j inclusive."""
    if not 0 <= i <= j < c.size:
        raise IndexError(f"segment {i}..{j} out of range for length {c.size}")
    out = c.copy()
    out[i : j + 1] = out[i : j + 1][::-1]
    return out


def duplicate_segment(c: Chromosome, i: int, j: int, k: int) -> Chromosome:
    """Copy bits i..j onto position k, truncated at the chromosome end.

    Fixed-length stand-in for the classic duplication operator.
    """
    if not 0 <= i <= j < c.size or not 0 <= k < c.size:
        raise IndexError(f"bad duplication indices ({i}, {j}, {k}) for length {c.size}")
    out = c.copy()
    span = min(j - i + 1, c.size - k)
    out[k : k + span] = c[i : i + span]
    return out


FitnessFn = Callable[[Chromosome], float]


@dataclass
class GaResult:
    best: Chromosome
    best_fitness: float
    best_trace: list[float]
    mean_trace: list[float]
    generations: int


def evolve(
    fitness: FitnessFn,
    length: int,
    params: GaParams,
    seed: int,
    target_fitness: float | None = None,
) -> GaResult:
    """Run the generational GA and return the best genotype plus traces.

    Stops at ``max_gens`` generations, or earlier when ``target_fitness``
    is declared and reached. With elitism the best individual survives
    unchanged, so the best-fitness trace is monotone non-decreasing.
    """
    rng = np.random.default_rng(seed)
    population = [rng.integers(0, 2, size=length).astype(np.uint8) for _ in range(params.pop_size)]
    fitnesses = [float(fitness(c)) for c in population]

    best_trace: list[float] = []
    mean_trace: list[float] = []
    gens_run = 0
    while True:
        best_idx = int(np.argmax(fitnesses))
        best_trace.append(fitnesses[best_idx])
        mean_trace.append(float(np.mean(fitnesses)))
        reached = target_fitness is not None and fitnesses[best_idx] >= target_fitness
        if reached or gens_run >= params.max_gens:
            break

        next_pop: list[Chromosome] = []
        if params.elitism:
            next_pop.append(population[best_idx].copy())
        while len(next_pop) < params.pop_size:
            pa = _select(population, fitnesses, params, rng)
            pb = _select(population, fitnesses, params, rng)
            if length > 1 and rng.random() < params.pc:
                cut = int(rng.integers(1, length))
                ca_, cb_ = one_point_crossover(pa, pb, cut)
            else:
                ca_, cb_ = pa.copy(), pb.copy()
            for child in (ca_, cb_):
                child = mutate(child, params.pm, rng)
                if rng.random() < params.p_inv:
                    i, j = sorted(rng.integers(length, size=2).tolist())
                    child = invert_segment(child, int(i), int(j))
                if params.p_dup > 0 and rng.random() < params.p_dup:
                    i, j = sorted(rng.integers(length, size=2).tolist())
                    k = int(rng.integers(length))
                    child = duplicate_segment(child, int(i), int(j), k)
                if len(next_pop) < params.pop_size:
                    next_pop.append(child)
        population = next_pop
        fitnesses = [float(fitness(c)) for c in population]
        gens_run += 1

    best_idx = int(np.argmax(fitnesses))
    return GaResult(
        best=population[best_idx].copy(),
        best_fitness=fitnesses[best_idx],
        best_trace=best_trace,
        mean_trace=mean_trace,
        generations=gens_run,
    )


def _select(
    population: list[Chromosome], fitnesses: list[float], params: GaParams, rng: np.random.Generator
) -> Chromosome:
    if params.selection == "tournament":
        return tournament_select(population, fitnesses, rng, params.tournament_k)
    return roulette_select(population, fitnesses, rng)


def chromosome_to_rule(c: Chromosome) -> RuleTable:
    """Decode 8 bits (most significant first) into an elementary rule table."""
    if c.size != 8:
        raise ValueError(f"elementary rule chromosome must have 8 bits, got {c.size}")
    n = 0
    for bit in c:
        n = (n << 1) | int(bit)
    return rule_from_number(n)


def rule_to_chromosome(rule: RuleTable) -> Chromosome:
    from .ca import rule_to_number

    n = rule_to_number(rule)
    return np.array([(n >> (7 - i)) & 1 for i in range(8)], dtype=np.uint8)


def trajectory_match_fitness(target: Sequence[CAState], steps: int) -> FitnessFn:
    """Fitness = fraction of cells matching the target trajectory.

    The candidate rule is run from the target's own initial state.
    """
    start = target[0]
    stacked = np.stack([s.cells for s in target])
    total = stacked.size

    def fitness(c: Chromosome) -> float:
        rule = chromosome_to_rule(c)
        cand = ca_run(start, rule, steps)
        cand_stacked = np.stack([s.cells for s in cand])
        return float((cand_stacked == stacked).sum() / total)

    return fitness


def evolve_ca_rule(
    target: Sequence[CAState], params: GaParams, seed: int
) -> tuple[RuleTable, GaResult]:
    """Recover an elementary rule whose trajectory reproduces the target."""
    steps = len(target) - 1
    fitness = trajectory_match_fitness(target, steps)
    result = evolve(fitness, 8, params, seed, target_fitness=1.0)
    return chromosome_to_rule(result.best), result
