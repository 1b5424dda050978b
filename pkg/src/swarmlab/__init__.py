"""Swarm-intelligence workbench.

Bio-inspired behaviour generators (pheromone grids, cellular automata,
boids, ant clustering, trail colonies over image habitats, ant-system
TSP, genetic algorithms) plus an event-sourced multi-user letter
habitat served over HTTP.
"""

from .grid import (
    Coord,
    NeighborhoodKind,
    PheromoneField,
    TorusDims,
    make_rng,
    neighborhood,
    spawn_seeds,
    torus_wrap,
)

__version__ = "0.1.0"

__all__ = [
    "Coord",
    "NeighborhoodKind",
    "PheromoneField",
    "TorusDims",
    "make_rng",
    "neighborhood",
    "spawn_seeds",
    "torus_wrap",
    "__version__",
]
