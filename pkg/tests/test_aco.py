import numpy as np
import pytest

from swarmlab.aco import (
    AcoParams,
    NotAPermutationError,
    Tour,
    TspInstance,
    brute_force_optimum,
    construct_tour,
    initial_pheromone,
    solve,
    tour_length,
    update_pheromone,
)

UNIT_SQUARE = TspInstance.from_coords(np.array([[0, 0], [1, 0], [1, 1], [0, 1]]))

EQUILATERAL = TspInstance(
    np.array(
        [
            [0.0, 1.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 0.0],
        ]
    )
)


class TestInstance:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            TspInstance(np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError):
            TspInstance(np.array([[1.0, 1.0], [1.0, 0.0]]))


class TestTourLength:
    def test_single_city(self):
        inst = TspInstance(np.zeros((1, 1)))
        assert tour_length([0], inst) == 0.0

    def test_unit_square_perimeter(self):
        assert tour_length([0, 1, 2, 3], UNIT_SQUARE) == pytest.approx(4.0)

    def test_equilateral_any_order(self):
        import itertools

        for perm in itertools.permutations(range(3)):
            assert tour_length(list(perm), EQUILATERAL) == pytest.approx(3.0)

    def test_rejects_non_permutation(self):
        with pytest.raises(NotAPermutationError):
            tour_length([0, 0, 1], EQUILATERAL)


class TestConstructTour:
    def test_single_city_tour(self):
        inst = TspInstance(np.zeros((1, 1)))
        params = AcoParams(n_ants=1)
        tour = construct_tour(inst, initial_pheromone(inst, params), params, np.random.default_rng(0))
        assert tour.order == [0] and tour.length == 0.0

    def test_uniform_tau_symmetric_orders(self):
        # 3 cities, beta off: both continuations from any start are 50/50
        params = AcoParams(alpha=1.0, beta_vis=0.0)
        tau = initial_pheromone(EQUILATERAL, params)
        rng = np.random.default_rng(42)
        firsts = {0: 0, 1: 0}
        for _ in range(4000):
            tour = construct_tour(EQUILATERAL, tau, params, rng)
            start = tour.order[0]
            nxt = tour.order[1]
            # label the branch by whether the tour goes clockwise from start
            firsts[(nxt - start) % 3 == 1] += 1
        assert abs(firsts[0] - firsts[1]) < 300

    def test_visibility_ratio_two_candidates(self):
        # alpha=0, beta=1, distances 1 and 2 from the start: P = 2/3 vs 1/3
        dist = np.array(
            [
                [0.0, 1.0, 2.0],
                [1.0, 0.0, 1.5],
                [2.0, 1.5, 0.0],
            ]
        )
        inst = TspInstance(dist)
        params = AcoParams(alpha=0.0, beta_vis=1.0)
        tau = initial_pheromone(inst, params)
        rng = np.random.default_rng(7)
        near = 0
        trials = 0
        for _ in range(9000):
            tour = construct_tour(inst, tau, params, rng)
            if tour.order[0] != 0:
                continue
            trials += 1
            near += tour.order[1] == 1
        assert trials > 2000
        assert near / trials == pytest.approx(2 / 3, abs=0.03)

    def test_every_tour_is_permutation(self):
        rng = np.random.default_rng(3)
        coords = rng.random((7, 2))
        inst = TspInstance.from_coords(coords)
        params = AcoParams()
        tau = initial_pheromone(inst, params)
        for _ in range(50):
            tour = construct_tour(inst, tau, params, rng)
            assert sorted(tour.order) == list(range(7))


class TestUpdatePheromone:
    def test_pure_decay(self):
        params = AcoParams(rho=0.5, tau0=1.0)
        tau = initial_pheromone(EQUILATERAL, params)
        tau = update_pheromone(tau, [], params)
        off_diag = tau[~np.eye(3, dtype=bool)]
        assert np.allclose(off_diag, 0.5)

    def test_deposit_amount(self):
        params = AcoParams(rho=0.0, q_deposit=1.0, tau0=1.0)
        inst = TspInstance(np.array([[0.0, 1.0], [1.0, 0.0]]))
        tau = initial_pheromone(inst, params)
        tau = update_pheromone(tau, [Tour([0, 1], 2.0)], params)
        # both directions of the two edges (0-1 out and back) gain 0.5 each
        assert tau[0, 1] == pytest.approx(1.0 + 0.5 + 0.5)

    def test_identity_with_zero_rho_no_tours(self):
        params = AcoParams(rho=0.0)
        tau = initial_pheromone(EQUILATERAL, params)
        before = tau.copy()
        tau = update_pheromone(tau, [], params)
        assert np.array_equal(tau, np.maximum(params.tau_min, before))

    def test_symmetry_and_floor_after_many_updates(self):
        rng = np.random.default_rng(9)
        inst = TspInstance.from_coords(rng.random((6, 2)))
        params = AcoParams(rho=0.9, tau_min=1e-6)
        tau = initial_pheromone(inst, params)
        for _ in range(60):
            tours = [construct_tour(inst, tau, params, rng) for _ in range(4)]
            tau = update_pheromone(tau, tours, params)
            assert np.allclose(tau, tau.T)
            assert tau.min() >= params.tau_min


class TestSolve:
    def test_equilateral_immediately_optimal(self):
        result = solve(EQUILATERAL, AcoParams(n_ants=2), iterations=1, seed=0)
        assert result.best.length == pytest.approx(3.0)
        assert result.trace[0] == pytest.approx(3.0)

    def test_unit_square_optimum(self):
        # brute force over the 3 distinct cyclic orders gives 4.0
        assert brute_force_optimum(UNIT_SQUARE) == pytest.approx(4.0)
        result = solve(UNIT_SQUARE, AcoParams(), iterations=20, seed=1)
        assert result.best.length == pytest.approx(4.0)

    def test_trace_monotone_two_seeds(self):
        rng = np.random.default_rng(11)
        inst = TspInstance.from_coords(rng.random((8, 2)))
        for seed in (100, 200):
            trace = solve(inst, AcoParams(n_ants=5), iterations=30, seed=seed).trace
            assert all(b <= a for a, b in zip(trace, trace[1:]))
