"""Config-driven workbench entry point.

One JSON config file fully describes an experiment; command-line flags
can only override the seed and the output directory, so every artifact
directory is self-describing via its manifest. Identical configs
produce bit-identical metrics files.

Exit codes: 0 success, 2 invalid config, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .accel import backend_name
from .aco import AcoParams, TspInstance, solve
from .boids import BoidParams, Obstacle
from .ca import CAState, RuleTable, ca_run, rule_from_number, trajectory_grey
from .clustering import (
    ClusterParams,
    clustering_run,
    load_items,
    mean_pairwise_distance,
    random_world,
    save_items,
    save_metrics,
)
from .experiments import (
    ClusteringBenchmark,
    CohesionScenario,
    ObstacleScenario,
    SwapScenario,
    gaussian_items,
)
from .ga import GaParams, bits_to_string, evolve, evolve_ca_rule
from .grid import PheromoneField, TorusDims, spawn_seeds
from .habitat_service import ServiceConfig, serve_forever
from .pgm import read_pgm, write_field_pgm, write_pgm
from .trails import (
    ImageHabitat,
    TrailParams,
    cognitive_map,
    colony_run,
    habitat_swap_experiment,
    random_ants,
    stripe_habitat,
    two_blob_habitat,
)

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_IO_FAILURE = 3

KINDS = (
    "ca",
    "boids",
    "clustering",
    "trails",
    "habitat-swap",
    "aco",
    "ga",
    "ga-ca",
    "serve-habitat",
)


class InvalidConfigError(Exception):
    def __init__(self, field: str, reason: str) -> None:
        super().__init__(f"config field {field!r}: {reason}")
        self.field = field


def _need(params: dict, name: str, kind, default=None, required=False):
    if name not in params:
        if required:
            raise InvalidConfigError(name, "required field is missing")
        return default
    value = params[name]
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(name, f"cannot interpret {value!r} as {kind.__name__}")


def load_config(path: str, kind: str, seed_override, output_override) -> dict:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfigError("<config file>", f"cannot read {path}: {exc}")
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidConfigError("<config file>", f"not valid JSON: {exc}")
    if not isinstance(config, dict):
        raise InvalidConfigError("<config file>", "top level must be an object")
    config_kind = config.get("kind")
    if config_kind != kind:
        raise InvalidConfigError("kind", f"config says {config_kind!r}, command is {kind!r}")
    if "seed" not in config:
        raise InvalidConfigError("seed", "required field is missing")
    if seed_override is not None:
        config["seed"] = seed_override
    config["seed"] = _need(config, "seed", int, required=True)
    if output_override is not None:
        config["output_dir"] = output_override
    if kind != "serve-habitat" and "output_dir" not in config:
        raise InvalidConfigError("output_dir", "required field is missing")
    if not isinstance(config.get("params", {}), dict):
        raise InvalidConfigError("params", "must be an object")
    config.setdefault("params", {})
    return config


def resolve_output_dir(config: dict) -> Path:
    out = Path(config["output_dir"])
    root = os.environ.get("SWARMLAB_OUTPUT_ROOT")
    if root and not out.is_absolute():
        out = Path(root) / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, config: dict, seeds_used: list[int]) -> None:
    import numba

    manifest = {
        "config": config,
        "seeds_used": seeds_used,
        "versions": {
            "swarmlab": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "numba": numba.__version__,
        },
        "kernel_backend": backend_name(),
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _csv_writer(path: Path, header: list[str]):
    fh = open(path, "w", newline="")
    writer = csv.writer(fh)
    writer.writerow(header)
    return fh, writer


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ----------------------------------------------------------------- ca


def run_ca(config: dict, out: Path) -> None:
    params = config["params"]
    width = _need(params, "width", int, required=True)
    steps = _need(params, "steps", int, required=True)
    if width < 1:
        raise InvalidConfigError("width", "must be >= 1")
    if steps < 0:
        raise InvalidConfigError("steps", "must be >= 0")
    if "table" in params:
        table = params["table"]
        if not isinstance(table, list) or len(table) != 8 or set(table) - {0, 1}:
            raise InvalidConfigError("table", "must be a flat list of 8 bits")
        from .ca import ELEMENTARY_OFFSETS

        rule = RuleTable(states=2, offsets=ELEMENTARY_OFFSETS, table=np.array(table))
    else:
        number = _need(params, "rule", int, required=True)
        if not 0 <= number <= 255:
            raise InvalidConfigError("rule", "must be in 0..255")
        rule = rule_from_number(number)
    initial = _need(params, "initial", str, default="single-one")
    if initial == "single-one":
        state = CAState.single_one(width)
    elif initial == "random":
        rng = np.random.default_rng(config["seed"])
        state = CAState.line(rng.integers(0, 2, size=width))
    else:
        raise InvalidConfigError("initial", f"unknown initial condition {initial!r}")

    trajectory = ca_run(state, rule, steps)
    write_pgm(trajectory_grey(trajectory), out / "trajectory.pgm")
    (out / "rule.json").write_text(json.dumps({"states": 2, "table": rule.table.tolist()}) + "\n")
    fh, writer = _csv_writer(out / "metrics.csv", ["step", "active_cells"])
    with fh:
        for t, s in enumerate(trajectory):
            writer.writerow([t, int(s.cells.sum())])
    write_manifest(out, config, [config["seed"]])


# -------------------------------------------------------------- boids


def run_boids(config: dict, out: Path) -> None:
    params = config["params"]
    scenario_name = _need(params, "scenario", str, default="cohesion")
    steps = _need(params, "steps", int, default=None)
    n_boids = _need(params, "n_boids", int, default=None)
    overrides = {}
    for name in ("r_sep", "r_neigh", "w_sep", "w_align", "w_coh", "v_max"):
        if name in params:
            overrides[name] = _need(params, name, float)
    if "world" in params:
        overrides["world"] = tuple(float(v) for v in params["world"])

    if scenario_name == "cohesion":
        base = CohesionScenario()
        scenario = CohesionScenario(
            n_boids=n_boids or base.n_boids,
            steps=steps or base.steps,
            params=BoidParams(**{**base.params.__dict__, **overrides}),
        )
    elif scenario_name == "obstacle":
        base = ObstacleScenario()
        obstacle = base.obstacle
        if "obstacle" in params:
            cfg = params["obstacle"]
            obstacle = Obstacle(tuple(cfg["center"]), float(cfg["radius"]), float(cfg.get("w_avoid", 12.0)))
        scenario = ObstacleScenario(
            n_boids=n_boids or base.n_boids,
            steps=steps or base.steps,
            obstacle=obstacle,
            params=BoidParams(**{**base.params.__dict__, **overrides}),
        )
    else:
        raise InvalidConfigError("scenario", f"unknown scenario {scenario_name!r}")

    fh, writer = _csv_writer(out / "trace.csv", ["step", "boid", "x", "y", "vx", "vy"])

    def record(step, pos, vel):
        for i in range(pos.shape[0]):
            writer.writerow([step, i, *(repr(float(v)) for v in (*pos[i], *vel[i]))])

    with fh:
        result = scenario.run(config["seed"], record=record)
    summary = {k: v for k, v in result.items() if k != "counts"}
    fh, mwriter = _csv_writer(out / "metrics.csv", ["metric", "value"])
    with fh:
        for key in sorted(summary):
            mwriter.writerow([key, _fmt(summary[key])])
        if "counts" in result:
            for step, count in enumerate(result["counts"]):
                mwriter.writerow([f"subflocks_step_{step:05d}", count])
    write_manifest(out, config, [config["seed"]])


# --------------------------------------------------------- clustering


def run_clustering(config: dict, out: Path) -> None:
    params = config["params"]
    rng = np.random.default_rng(config["seed"])
    bench = ClusteringBenchmark()
    steps = _need(params, "steps", int, default=bench.steps)
    metrics_every = _need(params, "metrics_every", int, default=max(1, steps // 20))
    entropy_patch = _need(params, "entropy_patch", int, default=bench.entropy_patch)

    if "dataset_csv" in params:
        ids, attrs = load_items(params["dataset_csv"])
    else:
        attrs = gaussian_items(rng, n_items=_need(params, "n_items", int, default=bench.n_items))
        ids = [f"item{i}" for i in range(attrs.shape[0])]
    grid = params.get("grid", [bench.grid_side, bench.grid_side])
    dims = TorusDims(int(grid[0]), int(grid[1]))
    alpha_sim = _need(params, "alpha_sim", float, default=None)
    if alpha_sim is None:
        alpha_sim = _need(params, "alpha_scale", float, default=bench.alpha_scale) * mean_pairwise_distance(attrs)
    cparams = ClusterParams(
        dims=dims,
        n_ants=_need(params, "n_ants", int, default=bench.n_ants),
        alpha_sim=alpha_sim,
        k1=_need(params, "k1", float, default=bench.k1),
        k2=_need(params, "k2", float, default=bench.k2),
        s=_need(params, "s", int, default=bench.s),
    )
    world = random_world(attrs, cparams, rng)
    records = clustering_run(world, steps, rng, metrics_every=metrics_every, entropy_patch=entropy_patch)
    save_metrics(out / "metrics.csv", records)
    save_items(out / "items.csv", ids, attrs)
    occupancy = (world.item_grid >= 0).astype(np.int64) * 255
    write_pgm(occupancy, out / "final_items.pgm")
    write_manifest(out, config, [config["seed"]])


# -------------------------------------------------------------- trails


def _habitat_from_params(params: dict, side_default: int = 64) -> ImageHabitat:
    name = params.get("habitat", "two-blob")
    if isinstance(name, str) and name.endswith(".pgm"):
        return ImageHabitat.from_grey(read_pgm(name))
    side = int(params.get("side", side_default))
    dims = TorusDims(side, side)
    if name == "two-blob":
        return two_blob_habitat(dims)
    if name == "stripes":
        return stripe_habitat(dims)
    raise InvalidConfigError("habitat", f"unknown habitat {name!r} (path to .pgm, 'two-blob' or 'stripes')")


def _trail_params(params: dict) -> TrailParams:
    base = SwapScenario().params
    return TrailParams(
        n_ants=int(params.get("n_ants", base.n_ants)),
        beta=float(params.get("beta", base.beta)),
        delta=float(params.get("delta", base.delta)),
        eta=float(params.get("eta", base.eta)),
        gamma=float(params.get("gamma", base.gamma)),
        rho=float(params.get("rho", base.rho)),
    )


def run_trails(config: dict, out: Path) -> None:
    params = config["params"]
    habitat = _habitat_from_params(params)
    tparams = _trail_params(params)
    steps = _need(params, "steps", int, default=2000)
    rng = np.random.default_rng(config["seed"])
    field = PheromoneField.zeros(habitat.dims)
    ants = random_ants(tparams.n_ants, habitat.dims, rng)
    colony_run(ants, field, habitat, tparams, steps, rng)
    cmap = cognitive_map(field)
    write_field_pgm(field, out / "cognitive_map.pgm")
    fh, writer = _csv_writer(out / "heights.csv", ["x", "y", "height"])
    with fh:
        for y in range(habitat.dims.height):
            for x in range(habitat.dims.width):
                writer.writerow([x, y, repr(float(cmap[y, x]))])
    write_manifest(out, config, [config["seed"]])


def run_habitat_swap(config: dict, out: Path) -> None:
    params = config["params"]
    scenario = SwapScenario(
        side=_need(params, "side", int, default=SwapScenario.side),
        steps_per_phase=_need(params, "steps_per_phase", int, default=SwapScenario.steps_per_phase),
        threshold=_need(params, "threshold", float, default=SwapScenario.threshold),
        params=_trail_params(params),
    )
    n_seeds = _need(config, "seeds", int, default=10)
    seeds = spawn_seeds(config["seed"], n_seeds)
    habitat_a = _habitat_from_params({**params, "habitat": params.get("habitat_a", "two-blob")}, scenario.side)
    habitat_b = _habitat_from_params({**params, "habitat": params.get("habitat_b", "stripes")}, scenario.side)
    result = habitat_swap_experiment(
        habitat_a, habitat_b, scenario.params, scenario.steps_per_phase, seeds, scenario.threshold
    )
    fh, writer = _csv_writer(out / "pairs.csv", ["seed", "fresh_steps", "trained_steps"])
    with fh:
        for seed, fresh, trained in zip(seeds, result.fresh_times, result.trained_times):
            writer.writerow([seed, _fmt(fresh), _fmt(trained)])
    fh, writer = _csv_writer(out / "metrics.csv", ["metric", "value"])
    with fh:
        writer.writerow(["resistance_fraction", repr(result.resistance_fraction)])
        writer.writerow(["threshold", repr(result.threshold)])
    write_manifest(out, config, seeds)


# ---------------------------------------------------------------- aco


def run_aco(config: dict, out: Path) -> None:
    params = config["params"]
    rng = np.random.default_rng(config["seed"])
    if "cities_csv" in params:
        coords = []
        with open(params["cities_csv"], newline="") as fh:
            for row in csv.DictReader(fh):
                coords.append((float(row["x"]), float(row["y"])))
        inst = TspInstance.from_coords(np.asarray(coords))
    elif "matrix_csv" in params:
        matrix = np.loadtxt(params["matrix_csv"], delimiter=",")
        inst = TspInstance(matrix)
    else:
        n = _need(params, "n_cities", int, default=8)
        inst = TspInstance.from_coords(rng.random((n, 2)))
    aparams = AcoParams(
        alpha=float(params.get("alpha", 1.0)),
        beta_vis=float(params.get("beta_vis", 2.0)),
        rho=float(params.get("rho", 0.1)),
        q_deposit=float(params.get("q_deposit", 1.0)),
        n_ants=int(params.get("n_ants", 20)),
    )
    iterations = _need(params, "iterations", int, default=200)
    result = solve(inst, aparams, iterations, config["seed"])
    fh, writer = _csv_writer(out / "results.csv", ["iteration", "best_length"])
    with fh:
        for i, length in enumerate(result.trace, start=1):
            writer.writerow([i, repr(length)])
    fh, writer = _csv_writer(out / "best_tour.csv", ["position", "city"])
    with fh:
        for i, city in enumerate(result.best.order):
            writer.writerow([i, city])
    write_manifest(out, config, [config["seed"]])


# ----------------------------------------------------------------- ga


def _ga_params(params: dict) -> GaParams:
    return GaParams(
        pop_size=int(params.get("pop_size", 50)),
        pc=float(params.get("pc", 0.7)),
        pm=float(params.get("pm", 0.02)),
        p_inv=float(params.get("p_inv", 0.05)),
        p_dup=float(params.get("p_dup", 0.0)),
        elitism=bool(params.get("elitism", True)),
        max_gens=int(params.get("max_gens", 200)),
        selection=str(params.get("selection", "roulette")),
    )


def run_ga(config: dict, out: Path) -> None:
    params = config["params"]
    fitness_name = _need(params, "fitness", str, default="onemax")
    length = _need(params, "length", int, default=32)
    if fitness_name != "onemax":
        raise InvalidConfigError("fitness", f"unknown fitness {fitness_name!r}")
    gparams = _ga_params(params)
    result = evolve(lambda c: float(c.sum()), length, gparams, config["seed"], target_fitness=float(length))
    _write_ga_outputs(out, result)
    write_manifest(out, config, [config["seed"]])


def run_ga_ca(config: dict, out: Path) -> None:
    params = config["params"]
    target_rule = _need(params, "target_rule", int, default=90)
    width = _need(params, "width", int, default=8)
    steps = _need(params, "steps", int, default=8)
    if not 0 <= target_rule <= 255:
        raise InvalidConfigError("target_rule", "must be in 0..255")
    target = ca_run(CAState.single_one(width), rule_from_number(target_rule), steps)
    rule, result = evolve_ca_rule(target, _ga_params(params), config["seed"])
    _write_ga_outputs(out, result)
    (out / "recovered_rule.json").write_text(
        json.dumps({"table": rule.table.tolist(), "fitness": result.best_fitness}) + "\n"
    )
    write_manifest(out, config, [config["seed"]])


def _write_ga_outputs(out: Path, result) -> None:
    fh, writer = _csv_writer(out / "trace.csv", ["generation", "best", "mean"])
    with fh:
        for gen, (best, mean) in enumerate(zip(result.best_trace, result.mean_trace)):
            writer.writerow([gen, repr(best), repr(mean)])
    (out / "best_genotype.txt").write_text(bits_to_string(result.best) + "\n")


# -------------------------------------------------------- serve-habitat


def run_serve_habitat(config: dict) -> None:
    params = config["params"]
    service_config = ServiceConfig(
        dims=TorusDims(
            _need(params, "width", int, default=20), _need(params, "height", int, default=20)
        ),
        letters=_need(params, "letters", str, required=True),
        seed=config["seed"],
        data_dir=Path(_need(params, "data_dir", str, required=True)),
        lexicon_paths=tuple(params.get("lexicon", [])),
        deposit_amount=float(params.get("deposit_amount", 1.0)),
        tick_interval_s=float(params.get("tick_interval_s", 30.0)),
        tick_rho=float(params.get("tick_rho", 0.02)),
        snapshot_every=int(params.get("snapshot_every", 100)),
        host=str(params.get("host", "127.0.0.1")),
        port=int(params.get("port", 8700)),
    )
    serve_forever(service_config)


RUNNERS = {
    "ca": run_ca,
    "boids": run_boids,
    "clustering": run_clustering,
    "trails": run_trails,
    "habitat-swap": run_habitat_swap,
    "aco": run_aco,
    "ga": run_ga,
    "ga-ca": run_ga_ca,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="swarmlab", description="swarm-intelligence workbench experiments"
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment from a config file")
        p.add_argument("config", help="path to the JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--output-dir", default=None, help="override the config output_dir")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config, args.kind, args.seed, args.output_dir)
        if args.kind == "serve-habitat":
            run_serve_habitat(config)
            return EXIT_OK
        out = resolve_output_dir(config)
        RUNNERS[args.kind](config, out)
    except InvalidConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except OSError as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return EXIT_IO_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
