"""Compare the numba kernels against the un-jitted fallback.

Runs the two hot kernels (ant clustering, trail colony) under both
backends in subprocesses and prints wall times plus the speedup.

    python3 benchmarks/bench_backends.py [--cluster-steps N] [--trail-steps N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json
import time
import numpy as np
from swarmlab.accel import backend_name
from swarmlab.clustering import ClusterParams, clustering_run, mean_pairwise_distance, random_world
from swarmlab.experiments import gaussian_items
from swarmlab.grid import PheromoneField, TorusDims
from swarmlab.trails import TrailParams, colony_run, random_ants, two_blob_habitat

cluster_steps = {cluster_steps}
trail_steps = {trail_steps}

rng = np.random.default_rng(42)
attrs = gaussian_items(rng)
params = ClusterParams(dims=TorusDims(50, 50), n_ants=10, alpha_sim=mean_pairwise_distance(attrs))
world = random_world(attrs, params, rng)
clustering_run(world, 10, rng)  # warm-up / compile
t0 = time.perf_counter()
clustering_run(world, cluster_steps, rng)
cluster_s = time.perf_counter() - t0

dims = TorusDims(64, 64)
habitat = two_blob_habitat(dims)
tparams = TrailParams(n_ants=256)
field = PheromoneField.zeros(dims)
ants = random_ants(256, dims, rng)
colony_run(ants, field, habitat, tparams, 5, rng)  # warm-up / compile
t0 = time.perf_counter()
colony_run(ants, field, habitat, tparams, trail_steps, rng)
trail_s = time.perf_counter() - t0

print(json.dumps({{"backend": backend_name(), "cluster_s": cluster_s, "trail_s": trail_s}}))
"""


def run(no_numba: bool, cluster_steps: int, trail_steps: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["SWARMLAB_NO_NUMBA"] = "1"
    else:
        env.pop("SWARMLAB_NO_NUMBA", None)
    code = WORKLOAD.format(cluster_steps=cluster_steps, trail_steps=trail_steps)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    if out.returncode != 0:
        sys.exit(out.stderr)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cluster-steps", type=int, default=20_000)
    parser.add_argument("--trail-steps", type=int, default=500)
    args = parser.parse_args()

    results = {}
    for label, flag in (("numba", False), ("python", True)):
        print(f"running {label} backend...", flush=True)
        results[label] = run(flag, args.cluster_steps, args.trail_steps)

    print()
    print(f"{'kernel':<18}{'numba':>12}{'python':>12}{'speedup':>10}")
    for key, title in (("cluster_s", "ant clustering"), ("trail_s", "trail colony")):
        jit, plain = results["numba"][key], results["python"][key]
        print(f"{title:<18}{jit:>11.3f}s{plain:>11.3f}s{plain / jit:>9.1f}x")


if __name__ == "__main__":
    main()
