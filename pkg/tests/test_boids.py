import numpy as np
import pytest

from swarmlab.boids import (
    Boid,
    BoidParams,
    Obstacle,
    centroid_msd,
    clamp_speed,
    flock_step,
    flock_step_arrays,
    neighbors_of,
    steer,
    subflock_count,
    toroidal_centroid,
    toroidal_delta,
    toroidal_distance,
)
from swarmlab.experiments import CohesionScenario, ObstacleScenario

P = BoidParams(world=(100.0, 100.0))


class TestToroidalGeometry:
    def test_delta_takes_short_way_round(self):
        d = toroidal_delta(np.array([95.0, 50.0]), np.array([5.0, 50.0]), (100.0, 100.0))
        assert d == pytest.approx([10.0, 0.0])

    def test_distance_symmetric(self):
        a, b = np.array([1.0, 2.0]), np.array([98.0, 97.0])
        assert toroidal_distance(a, b, (100.0, 100.0)) == pytest.approx(
            toroidal_distance(b, a, (100.0, 100.0))
        )

    def test_centroid_of_cluster_across_seam(self):
        pos = np.array([[98.0, 50.0], [2.0, 50.0]])
        c = toroidal_centroid(pos, (100.0, 100.0))
        assert c[0] == pytest.approx(0.0, abs=1e-9) or c[0] == pytest.approx(100.0, abs=1e-9)
        assert c[1] == pytest.approx(50.0)


class TestSteer:
    def test_isolated_boid_zero(self):
        b = Boid([10.0, 10.0], [1.0, 0.0])
        assert np.array_equal(steer(b, [], [], P), [0.0, 0.0])

    def test_separation_equal_and_opposite(self):
        a = Boid([50.0, 50.0], [0.0, 0.0])
        b = Boid([51.0, 50.0], [0.0, 0.0])
        acc_a = steer(a, [b], [], P)
        acc_b = steer(b, [a], [], P)
        assert acc_a[1] == 0.0 and acc_b[1] == 0.0
        assert acc_a[0] == pytest.approx(-acc_b[0])
        assert acc_a[0] < 0  # pushed away along -x

    def test_centered_boid_with_mean_velocity_only_separation_free_terms_vanish(self):
        p = BoidParams(world=(100.0, 100.0), r_sep=0.5)
        neighbors = [
            Boid([48.0, 50.0], [1.0, 1.0]),
            Boid([52.0, 50.0], [0.0, 0.0]),
            Boid([50.0, 48.0], [-1.0, 0.5]),
            Boid([50.0, 52.0], [0.0, -1.5]),
        ]
        mean_vel = np.mean([n.vel for n in neighbors], axis=0)
        b = Boid([50.0, 50.0], mean_vel)
        assert steer(b, neighbors, [], p) == pytest.approx([0.0, 0.0])

    def test_obstacle_repels_radially(self):
        b = Boid([45.0, 50.0], [0.0, 0.0])
        obs = Obstacle((50.0, 50.0), 4.0, w_avoid=2.0)
        acc = steer(b, [], [obs], P)
        assert acc[0] < 0 and acc[1] == 0.0
        # inverse-distance magnitude: w / d = 2 / 5
        assert acc[0] == pytest.approx(-2.0 / 5.0)

    def test_obstacle_inactive_beyond_twice_radius(self):
        b = Boid([40.0, 50.0], [0.0, 0.0])
        obs = Obstacle((50.0, 50.0), 4.0, w_avoid=2.0)
        assert np.array_equal(steer(b, [], [obs], P), [0.0, 0.0])


class TestFlockStep:
    def test_single_boid_ballistic(self):
        out = flock_step([Boid([10.0, 10.0], [1.0, 0.0])], [], P, 1.0)
        assert out[0].pos == pytest.approx([11.0, 10.0])

    def test_zero_weights_pure_ballistic(self):
        p = BoidParams(world=(100.0, 100.0), w_sep=0.0, w_align=0.0, w_coh=0.0)
        rng = np.random.default_rng(0)
        boids = [Boid(rng.random(2) * 100, rng.normal(0, 0.3, 2)) for _ in range(12)]
        out = flock_step(boids, [], p, 1.0)
        for before, after in zip(boids, out):
            assert after.pos == pytest.approx((before.pos + before.vel) % 100.0)
            assert after.vel == pytest.approx(before.vel)

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(1)
        boids = [Boid(rng.random(2) * 100, rng.normal(0, 1, 2)) for _ in range(10)]
        mirrored = [Boid([(-b.pos[0]) % 100.0, b.pos[1]], [-b.vel[0], b.vel[1]]) for b in boids]
        out = flock_step(boids, [], P, 1.0)
        out_m = flock_step(mirrored, [], P, 1.0)
        for a, m in zip(out, out_m):
            assert m.pos[0] == pytest.approx((-a.pos[0]) % 100.0)
            assert m.pos[1] == pytest.approx(a.pos[1])
            assert m.vel[0] == pytest.approx(-a.vel[0])
            assert m.vel[1] == pytest.approx(a.vel[1])

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        boids = [Boid(rng.random(2) * 100, rng.normal(0, 1, 2)) for _ in range(9)]
        perm = rng.permutation(9)
        out = flock_step(boids, [], P, 1.0)
        out_p = flock_step([boids[i] for i in perm], [], P, 1.0)
        for k, i in enumerate(perm):
            assert out_p[k].pos == pytest.approx(out[i].pos)
            assert out_p[k].vel == pytest.approx(out[i].vel)

    def test_speed_cap_holds(self):
        rng = np.random.default_rng(3)
        pos = rng.random((30, 2)) * 100
        vel = rng.normal(0, 5, (30, 2))
        p = BoidParams(world=(100.0, 100.0), v_max=1.5)
        for _ in range(50):
            pos, vel = flock_step_arrays(pos, vel, [Obstacle((50.0, 50.0), 5.0)], p, 1.0)
            assert np.linalg.norm(vel, axis=1).max() <= 1.5 + 1e-12

    def test_vectorized_step_matches_per_boid_steer(self):
        rng = np.random.default_rng(4)
        boids = [Boid(rng.random(2) * 100, rng.normal(0, 1, 2)) for _ in range(15)]
        obstacles = [Obstacle((30.0, 30.0), 6.0, 3.0), Obstacle((70.0, 60.0), 4.0, 5.0)]
        stepped = flock_step(boids, obstacles, P, 0.5)
        for i, b in enumerate(boids):
            acc = steer(b, neighbors_of(boids, i, P), obstacles, P)
            vel = clamp_speed(b.vel + 0.5 * acc, P.v_max)
            pos = (b.pos + 0.5 * vel) % 100.0
            assert stepped[i].vel == pytest.approx(vel, abs=1e-12)
            assert stepped[i].pos == pytest.approx(pos, abs=1e-12)

    def test_rejects_non_positive_dt(self):
        with pytest.raises(ValueError):
            flock_step([Boid([0.0, 0.0], [0.0, 0.0])], [], P, 0.0)


class TestSubflockCount:
    def test_empty(self):
        assert subflock_count([], 5.0, (100.0, 100.0)) == 0

    def test_chain_is_one_component(self):
        boids = [Boid([10.0 + 3.0 * i, 50.0], [0.0, 0.0]) for i in range(8)]
        assert subflock_count(boids, 3.5, (100.0, 100.0)) == 1

    def test_two_distant_groups(self):
        a = [Boid([10.0 + i, 10.0], [0.0, 0.0]) for i in range(3)]
        b = [Boid([60.0 + i, 60.0], [0.0, 0.0]) for i in range(3)]
        assert subflock_count(a + b, 3.0, (200.0, 200.0)) == 2

    def test_wraps_across_seam(self):
        boids = [Boid([99.0, 50.0], [0.0, 0.0]), Boid([1.0, 50.0], [0.0, 0.0])]
        assert subflock_count(boids, 3.0, (100.0, 100.0)) == 1


class TestScenarios:
    def test_cohesion_contracts_single_seed(self):
        result = CohesionScenario(steps=500).run(seed=12345)
        assert result["ratio"] < 0.25

    def test_obstacle_split_then_merge_single_seed(self):
        result = ObstacleScenario().run(seed=12345)
        assert result["max_subflocks"] >= 2
        assert result["end_subflocks"] == 1

    def test_msd_zero_for_coincident_points(self):
        pos = np.full((5, 2), 42.0)
        assert centroid_msd(pos, (100.0, 100.0)) == pytest.approx(0.0, abs=1e-18)
