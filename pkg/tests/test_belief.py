import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cirl.belief import (
    Belief,
    from_document,
    init_belief,
    map_estimate,
    map_index,
    posterior_mean,
    to_document,
    update,
)
from cirl.config import GameConfig, rng_for
from cirl.games import FeatureMap, GridWorld, make_trajectory


def toy_world(learning_steps=1):
    config = GameConfig(
        grid_size=2,
        horizon_total=2 * learning_steps,
        learning_steps=learning_steps,
        num_features=2,
        rbf_bandwidth=0.8,
    )
    features = FeatureMap.build(2, np.array([(0, 1), (1, 0)]), 0.8)
    return GridWorld.from_config(config, features)


def oracle_log_likelihood(world, theta, tau, lam):
    """Brute-force MaxEnt trajectory likelihood by full enumeration."""
    steps = len(tau.actions)
    weights = {}
    for actions in itertools.product(range(5), repeat=steps):
        states = [world.initial_state]
        for a in actions:
            states.append(world.step(states[-1], a))
        feats = world.features.matrix[states].sum(axis=0)
        weights[actions] = lam * float(feats @ theta)
    z = math.log(sum(math.exp(w) for w in weights.values()))
    return weights[tau.actions] - z


def manual_belief(particles, weights):
    particles = np.asarray(particles, dtype=float)
    log_w = np.log(np.asarray(weights, dtype=float))
    log_w -= np.log(np.exp(log_w).sum())
    return Belief(particles=particles, log_weights=log_w)


class TestInit:
    def test_single_particle_unit_weight(self):
        cfg = GameConfig(belief_samples=1, num_features=3)
        b = init_belief(cfg, rng_for(0, "b"))
        assert b.num_particles == 1
        assert b.weights[0] == pytest.approx(1.0)

    def test_prior_mean_near_zero(self):
        cfg = GameConfig(belief_samples=100_000, num_features=3)
        b = init_belief(cfg, rng_for(1, "b"))
        assert np.all(np.abs(posterior_mean(b)) < 0.02)

    def test_same_seed_same_particles(self):
        cfg = GameConfig(belief_samples=50, num_features=2)
        a = init_belief(cfg, rng_for(4, "b"))
        b = init_belief(cfg, rng_for(4, "b"))
        assert np.array_equal(a.particles, b.particles)


class TestUpdate:
    def test_lambda_zero_is_identity(self):
        world = toy_world()
        b = init_belief(world.config.with_overrides(belief_samples=32), rng_for(0, "b"))
        tau = make_trajectory(world, world.initial_state, [0])
        after = update(b, world, tau, lam=0.0)
        assert np.allclose(after.log_weights, b.log_weights, atol=1e-12)

    def test_duplicate_particles_stay_tied(self):
        world = toy_world()
        theta = np.array([0.4, -0.2])
        b = manual_belief([theta, theta, [0.9, 0.9]], [1, 1, 1])
        tau = make_trajectory(world, world.initial_state, [2])
        after = update(b, world, tau, lam=2.0)
        assert after.log_weights[0] == pytest.approx(after.log_weights[1], abs=1e-12)

    def test_posterior_odds_match_enumeration(self):
        world = toy_world()
        t1, t2 = np.array([0.8, -0.3]), np.array([-0.5, 0.6])
        b = manual_belief([t1, t2], [0.5, 0.5])
        tau = make_trajectory(world, world.initial_state, [1])
        lam = 1.3
        after = update(b, world, tau, lam)
        got_odds = math.exp(after.log_weights[0] - after.log_weights[1])
        want_odds = math.exp(
            oracle_log_likelihood(world, t1, tau, lam)
            - oracle_log_likelihood(world, t2, tau, lam)
        )
        assert got_odds == pytest.approx(want_odds, abs=1e-10)

    def test_full_bayes_consistency_on_toy_world(self):
        world = toy_world(learning_steps=2)
        rng = rng_for(7, "particles")
        particles = rng.uniform(-1, 1, (5, 2))
        prior = rng.uniform(0.1, 1.0, 5)
        b = manual_belief(particles, prior)
        lam = 2.1
        for actions in itertools.product(range(5), repeat=2):
            tau = make_trajectory(world, world.initial_state, actions)
            after = update(b, world, tau, lam)
            lik = np.array(
                [
                    math.exp(oracle_log_likelihood(world, p, tau, lam))
                    for p in particles
                ]
            )
            want = (prior / prior.sum()) * lik
            want /= want.sum()
            assert np.allclose(after.weights, want, atol=1e-10)

    def test_wrong_start_or_length_rejected(self):
        world = toy_world()
        tau = make_trajectory(world, 0, [1])
        if world.initial_state != 0:
            with pytest.raises(ValueError):
                update(init_belief(world.config, rng_for(0, "b")), world, tau, 1.0)
        too_long = make_trajectory(world, world.initial_state, [1, 1])
        with pytest.raises(ValueError):
            update(init_belief(world.config, rng_for(0, "b")), world, too_long, 1.0)


class TestPointEstimates:
    def test_symmetric_pair_has_zero_mean(self):
        theta = np.array([0.7, -0.2, 0.1])
        b = manual_belief([theta, -theta], [0.5, 0.5])
        assert np.allclose(posterior_mean(b), 0.0, atol=1e-12)

    def test_weighted_mean_hand_case(self):
        b = manual_belief([[1.0], [-1.0]], [0.25, 0.75])
        assert posterior_mean(b)[0] == pytest.approx(-0.5)

    def test_uniform_interval_mean_is_one_sixth(self):
        # midpoint grid on [0, 1/3): mean is exactly 1/6
        n = 600
        pts = (np.arange(n) + 0.5) / n / 3.0
        b = manual_belief(pts[:, None], np.ones(n))
        assert posterior_mean(b)[0] == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_map_single_particle(self):
        b = manual_belief([[0.3, 0.4]], [1.0])
        assert np.allclose(map_estimate(b), [0.3, 0.4])

    def test_map_tie_breaks_to_lowest_index(self):
        world = toy_world()
        b = manual_belief([[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]], [1, 1, 1])
        tau = make_trajectory(world, world.initial_state, [4])
        after = update(b, world, tau, lam=0.0)
        assert map_index(after) == 0

    def test_map_is_highest_likelihood_particle(self):
        world = toy_world()
        t1, t2 = np.array([0.9, -0.8]), np.array([-0.9, 0.8])
        b = manual_belief([t1, t2], [0.5, 0.5])
        tau = make_trajectory(world, world.initial_state, [0])  # N from center
        lam = 2.0
        after = update(b, world, tau, lam)
        liks = [oracle_log_likelihood(world, t, tau, lam) for t in (t1, t2)]
        assert map_index(after) == int(np.argmax(liks))


class TestInvariants:
    @given(st.floats(-50, 50))
    def test_log_weight_shift_invariance(self, shift):
        particles = np.array([[0.1], [0.5], [-0.4]])
        base = manual_belief(particles, [0.2, 0.5, 0.3])
        shifted = Belief(
            particles=particles,
            log_weights=base.log_weights + shift,
            normalized=False,
        )
        renorm = shifted.log_weights - math.log(np.exp(shifted.log_weights).sum())
        assert np.allclose(renorm, base.log_weights, atol=1e-9)

    @given(
        st.lists(st.floats(-1, 1), min_size=4, max_size=4),
        st.lists(st.floats(0.01, 1), min_size=2, max_size=2),
    )
    def test_posterior_mean_affine_equivariance(self, flat, w):
        particles = np.array(flat).reshape(2, 2)
        b = manual_belief(particles, w)
        a = np.array([[2.0, 1.0], [0.0, -1.0]])
        mapped = manual_belief(particles @ a.T, w)
        assert np.allclose(posterior_mean(mapped), a @ posterior_mean(b), atol=1e-9)

    def test_weights_sum_to_one_after_update(self):
        world = toy_world()
        b = init_belief(world.config.with_overrides(belief_samples=64), rng_for(3, "b"))
        tau = make_trajectory(world, world.initial_state, [2])
        after = update(b, world, tau, lam=3.0)
        assert after.weights.sum() == pytest.approx(1.0, abs=1e-9)
        assert after.num_particles == b.num_particles

    def test_document_round_trip(self):
        b = manual_belief([[0.1, 0.2], [0.3, -0.4]], [0.3, 0.7])
        doc = to_document(b)
        back = from_document(doc)
        assert np.allclose(back.particles, b.particles)
        assert np.allclose(back.log_weights, b.log_weights, atol=1e-12)
        assert doc["map_index"] == 1
        assert np.allclose(doc["posterior_mean"], posterior_mean(b))
