import math
import unittest

import numpy as np

import survival_fixtures
from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.models.network import (
    Activation,
    Architecture,
    HiddenLayer,
    RankOrientation,
    S1Mode,
    TrainConfig,
)
from survival_ranker.domain.models.survival_dataset import LabelMatrix, SurvivalDataset
from survival_ranker.domain.services._network import backward, forward, initialize_network
from survival_ranker.domain.services._survival_estimation import survival_labels
from survival_ranker.domain.services._survival_losses import (
    combined_loss,
    efron_batch_loss,
    ranking_loss,
    weight_penalty,
)


def _pairwise_rank_loss(s2, labels: LabelMatrix, sign: float = 1.0) -> float:
    total = pairs = 0
    n, horizon = s2.shape
    for t in range(horizon):
        for i in range(n):
            for j in range(n):
                if labels.mask[i, t] and labels.mask[j, t] and labels.labels[i, t] == 1 and labels.labels[j, t] == 0:
                    total += (sign * (s2[i, t] - s2[j, t]) - 1.0) ** 2
                    pairs += 1
    return total / pairs


class TestEfronBatchLoss(unittest.TestCase):
    def setUp(self):
        self.times = np.array([1.0, 1.0, 2.0])
        self.events = np.array([True, True, True])

    def test_tied_example_log_hazard(self):
        term = efron_batch_loss(np.zeros(3), self.times, self.events, S1Mode.LOG_HAZARD)
        self.assertAlmostEqual(term.loss, math.log(6), places=12)
        self.assertFalse(term.skipped)

    def test_tied_example_hazard(self):
        # softplus(s1) + 1e-8 == 1
        s1 = np.full(3, math.log(math.expm1(1.0 - 1e-8)))
        term = efron_batch_loss(s1, self.times, self.events, S1Mode.HAZARD)
        self.assertAlmostEqual(term.loss, 1.791759, places=6)

    def test_gradient_matches_finite_differences_in_both_modes(self):
        rng = np.random.default_rng(0)
        for mode in S1Mode:
            for seed in range(5):
                dataset = survival_fixtures.random_dataset(seed, n=12, tie_levels=4)
                s1 = rng.normal(size=12)
                term = efron_batch_loss(s1, dataset.times, dataset.events, mode)
                numeric = survival_fixtures.central_difference(
                    lambda x: efron_batch_loss(x, dataset.times, dataset.events, mode).loss, s1
                )
                self.assertLess(survival_fixtures.relative_error(term.gradient, numeric), 1e-6, mode)

    def test_single_event_alone_is_zero(self):
        term = efron_batch_loss(np.array([3.7]), np.array([2.0]), np.array([True]))
        self.assertEqual(term.loss, 0.0)

    def test_batch_without_events_is_skipped(self):
        term = efron_batch_loss(np.zeros(3), self.times, np.zeros(3, dtype=bool))
        self.assertTrue(term.skipped)
        self.assertEqual(term.loss, 0.0)
        np.testing.assert_array_equal(term.gradient, np.zeros(3))

    def test_untied_batch_equals_exact_partial_likelihood(self):
        dataset = survival_fixtures.random_dataset(4, n=25, tie_levels=None)
        s1 = np.random.default_rng(4).normal(size=25)
        expected = survival_fixtures.untied_partial_nll(s1, dataset.times, dataset.events)
        actual = efron_batch_loss(s1, dataset.times, dataset.events).loss
        self.assertLess(abs(actual - expected), 1e-12 * max(1.0, abs(expected)))


class TestRankingLoss(unittest.TestCase):
    def setUp(self):
        self.pair = LabelMatrix(labels=np.array([[1], [0]], dtype=np.int8), mask=np.ones((2, 1), dtype=bool))

    def test_exact_margin_is_zero(self):
        self.assertEqual(ranking_loss(np.array([[1.0], [0.0]]), self.pair).loss, 0.0)

    def test_zero_separation_is_one(self):
        self.assertEqual(ranking_loss(np.array([[0.5], [0.5]]), self.pair).loss, 1.0)

    def test_event_minus_survivor_orientation(self):
        term = ranking_loss(np.array([[1.0], [0.0]]), self.pair, RankOrientation.EVENT_MINUS_SURVIVOR)
        self.assertEqual(term.loss, 4.0)

    def test_all_censored_at_first_bin_is_skipped(self):
        dataset = SurvivalDataset.from_arrays(np.zeros((3, 1)), [0.2, 0.4, 0.6], [False, False, False], horizon_T=3)
        term = ranking_loss(np.full((3, 3), 0.5), survival_labels(dataset))
        self.assertTrue(term.skipped)
        self.assertEqual(term.loss, 0.0)

    def test_matches_pairwise_definition(self):
        rng = np.random.default_rng(1)
        for seed in range(5):
            labels = survival_labels(survival_fixtures.random_dataset(seed, n=15, tie_levels=5))
            s2 = rng.random(labels.labels.shape)
            for orientation, sign in ((RankOrientation.SURVIVOR_MINUS_EVENT, 1.0), (RankOrientation.EVENT_MINUS_SURVIVOR, -1.0)):
                expected = _pairwise_rank_loss(s2, labels, sign)
                self.assertAlmostEqual(ranking_loss(s2, labels, orientation).loss, expected, places=10)

    def test_gradient_matches_finite_differences(self):
        labels = survival_labels(survival_fixtures.random_dataset(8, n=10, tie_levels=4))
        s2 = np.random.default_rng(8).random(labels.labels.shape)
        term = ranking_loss(s2, labels)
        numeric = survival_fixtures.central_difference(lambda x: ranking_loss(x, labels).loss, s2)
        self.assertLess(survival_fixtures.relative_error(term.gradient, numeric), 1e-6)

    def test_permutation_invariant(self):
        labels = survival_labels(survival_fixtures.random_dataset(9, n=12, tie_levels=4))
        s2 = np.random.default_rng(9).random(labels.labels.shape)
        order = np.random.default_rng(10).permutation(12)
        self.assertAlmostEqual(
            ranking_loss(s2, labels).loss, ranking_loss(s2[order], labels.rows(order)).loss, places=12
        )

    def test_needs_two_records(self):
        with self.assertRaises(InvalidInputException):
            ranking_loss(np.array([[0.5]]), LabelMatrix(labels=np.ones((1, 1), dtype=np.int8), mask=np.ones((1, 1), dtype=bool)))


class TestCombinedLoss(unittest.TestCase):
    def setUp(self):
        self.architecture = Architecture(
            input_dim=3,
            hidden_layers=[HiddenLayer(width=4, activation=Activation.TANH, batch_norm=True, dropout=0.25)],
            horizon_T=4,
        )
        self.batch = SurvivalDataset.from_arrays(
            np.random.default_rng(2).random((4, 3)), [0.5, 1.5, 2.5, 3.2], [True, False, True, True], horizon_T=4
        )
        self.labels = survival_labels(self.batch)

    def test_lambda_zero_equals_efron_alone(self):
        state = initialize_network(self.architecture, seed=0)
        s1, s2, _ = forward(state, self.batch.features)
        loss = combined_loss(
            s1, s2, self.batch.times, self.batch.events, self.labels, state, TrainConfig(lambda_rank=0.0)
        )
        self.assertEqual(loss.total, efron_batch_loss(s1, self.batch.times, self.batch.events).loss)
        np.testing.assert_array_equal(loss.grad_s2, np.zeros_like(s2))

    def test_nothing_to_score_leaves_penalty_only(self):
        state = initialize_network(self.architecture, seed=0)
        censored = SurvivalDataset.from_arrays(self.batch.features, [0.1, 0.2, 0.3, 0.4], [False] * 4, horizon_T=4)
        s1, s2, _ = forward(state, censored.features)
        loss = combined_loss(
            s1, s2, censored.times, censored.events, survival_labels(censored), state, TrainConfig(l2=0.1)
        )
        self.assertTrue(loss.efron.skipped)
        self.assertTrue(loss.rank.skipped)
        self.assertEqual(loss.total, loss.penalty)
        self.assertGreater(loss.penalty, 0.0)

    def test_weight_penalty_ignores_biases(self):
        state = initialize_network(self.architecture, seed=0)
        value, grads = weight_penalty(state, l1=0.1, l2=0.2)
        self.assertEqual(set(grads), {"hidden0.weight", "bottleneck.weight", "head.weight"})
        expected = sum(0.1 * np.abs(w).sum() + 0.2 * np.sum(w ** 2) for w in (state.parameters[n] for n in grads))
        self.assertAlmostEqual(value, expected, places=12)

    def test_end_to_end_gradient_matches_finite_differences(self):
        state = initialize_network(self.architecture, seed=5)
        config = TrainConfig(lambda_rank=0.7, l2=0.05)

        def objective():
            s1, s2, cache = forward(state, self.batch.features, train_mode=True, rng=np.random.default_rng(6))
            loss = combined_loss(s1, s2, self.batch.times, self.batch.events, self.labels, state, config)
            return loss, cache

        loss, cache = objective()
        analytic = backward(state, cache, loss.grad_s1, loss.grad_s2)
        for name, grad in loss.penalty_grads.items():
            analytic[name] = analytic[name] + grad

        for name, value in state.parameters.items():
            def as_function(point, name=name):
                saved = state.parameters[name]
                state.parameters[name] = point
                try:
                    return objective()[0].total
                finally:
                    state.parameters[name] = saved

            numeric = survival_fixtures.central_difference(as_function, value.copy())
            self.assertLess(survival_fixtures.gradient_mismatch(analytic[name], numeric), 1e-5, name)


if __name__ == '__main__':
    unittest.main()
