import unittest

import numpy as np
from scipy.special import expit

import survival_fixtures
from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException
from survival_ranker.domain.models.network import (
    Activation,
    Architecture,
    HiddenLayer,
    NetworkManifest,
)
from survival_ranker.domain.services._network import (
    backward,
    forward,
    initialize_network,
    monotonicity_violation_rate,
    predict,
    update_running_statistics,
)


def _architecture(**layer):
    return Architecture(input_dim=3, hidden_layers=[HiddenLayer(width=4, **layer), HiddenLayer(width=3, **layer)], horizon_T=5)


class TestForward(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)
        self.batch = self.rng.random((6, 3))

    def test_zero_weights_give_constant_output(self):
        state = initialize_network(_architecture(), seed=1)
        for name in state.parameters:
            state.parameters[name] = np.zeros_like(state.parameters[name])
        state.parameters["bottleneck.bias"] = np.array([0.7])
        state.parameters["head.bias"] = np.linspace(-1, 1, 5)

        s1, s2, _ = forward(state, self.batch)

        np.testing.assert_array_equal(s1, np.full(6, 0.7))
        np.testing.assert_array_equal(s2, np.tile(expit(np.linspace(-1, 1, 5)), (6, 1)))

    def test_eval_mode_is_deterministic(self):
        state = initialize_network(_architecture(dropout=0.5, batch_norm=True), seed=2)
        first = forward(state, self.batch)
        second = forward(state, self.batch)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_train_mode_without_dropout_or_batch_norm_equals_eval(self):
        state = initialize_network(_architecture(), seed=3)
        train = forward(state, self.batch, train_mode=True, rng=np.random.default_rng(9))
        evaluation = forward(state, self.batch, train_mode=False)
        np.testing.assert_array_equal(train[0], evaluation[0])
        np.testing.assert_array_equal(train[1], evaluation[1])

    def test_dropout_masks_follow_the_rng(self):
        state = initialize_network(_architecture(dropout=0.5), seed=4)
        a = forward(state, self.batch, train_mode=True, rng=np.random.default_rng(5))
        b = forward(state, self.batch, train_mode=True, rng=np.random.default_rng(5))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[2].layers[0].dropout_mask, b[2].layers[0].dropout_mask)

    def test_saturated_head_stays_inside_unit_interval(self):
        state = initialize_network(_architecture(), seed=1)
        state.parameters["head.bias"] = np.array([800.0, -800.0, 40.0, -40.0, 0.0])

        _, s2, _ = forward(state, self.batch)

        self.assertTrue(np.all(s2 > 0.0) and np.all(s2 < 1.0))
        self.assertTrue(np.all(np.isfinite(np.log(s2))) and np.all(np.isfinite(np.log1p(-s2))))

    def test_batch_shape_checked(self):
        state = initialize_network(_architecture(), seed=0)
        with self.assertRaises(InvalidInputException):
            forward(state, self.rng.random((4, 2)))

    def test_non_finite_activation_reports_layer(self):
        state = initialize_network(_architecture(), seed=0)
        batch = self.batch.copy()
        batch[0, 0] = np.inf
        with self.assertRaises(NumericFailureException) as raised:
            forward(state, batch)
        self.assertEqual(raised.exception.layer, 0)

    def test_running_statistics_move_toward_batch_moments(self):
        state = initialize_network(_architecture(batch_norm=True), seed=0)
        _, _, cache = forward(state, self.batch * 10, train_mode=True)
        mean, var = cache.batch_moments["hidden0"]
        update_running_statistics(state, cache, momentum=0.9)
        np.testing.assert_allclose(state.buffers["hidden0.running_mean"], 0.1 * mean)
        np.testing.assert_allclose(state.buffers["hidden0.running_var"], 0.9 + 0.1 * var)


class TestBackward(unittest.TestCase):
    def _finite_difference_check(self, architecture, train_mode):
        state = initialize_network(architecture, seed=11)
        rng = np.random.default_rng(12)
        batch = rng.random((6, architecture.input_dim))
        upstream_s1 = rng.normal(size=6)
        upstream_s2 = rng.normal(size=(6, architecture.horizon_T))

        def objective():
            # same dropout masks on every evaluation
            s1, s2, cache = forward(state, batch, train_mode=train_mode, rng=np.random.default_rng(13))
            return float(upstream_s1 @ s1 + np.sum(upstream_s2 * s2)), cache

        _, cache = objective()
        analytic = backward(state, cache, upstream_s1, upstream_s2)
        self.assertEqual(list(analytic), list(state.parameters))

        for name, value in state.parameters.items():
            def as_function(point, name=name):
                saved = state.parameters[name]
                state.parameters[name] = point
                try:
                    return objective()[0]
                finally:
                    state.parameters[name] = saved

            numeric = survival_fixtures.central_difference(as_function, value.copy())
            self.assertLess(survival_fixtures.gradient_mismatch(analytic[name], numeric), 1e-5, name)

    def test_gradients_match_finite_differences_in_eval_mode(self):
        self._finite_difference_check(_architecture(activation=Activation.TANH, batch_norm=True), train_mode=False)

    def test_gradients_match_finite_differences_with_batch_norm_and_dropout(self):
        architecture = _architecture(activation=Activation.TANH, batch_norm=True, dropout=0.3)
        self._finite_difference_check(architecture, train_mode=True)

    def test_bias_before_batch_statistics_has_zero_gradient(self):
        state = initialize_network(_architecture(batch_norm=True), seed=3)
        rng = np.random.default_rng(4)
        _, _, cache = forward(state, rng.random((6, 3)), train_mode=True)

        grads = backward(state, cache, rng.normal(size=6), rng.normal(size=(6, 5)))

        np.testing.assert_allclose(grads["hidden0.bias"], 0.0, atol=1e-10)
        np.testing.assert_allclose(grads["hidden1.bias"], 0.0, atol=1e-10)

    def test_zero_upstream_gives_zero_gradients(self):
        state = initialize_network(_architecture(batch_norm=True), seed=0)
        _, _, cache = forward(state, np.random.default_rng(1).random((5, 3)), train_mode=True)
        grads = backward(state, cache, np.zeros(5), np.zeros((5, 5)))
        for name, grad in grads.items():
            np.testing.assert_array_equal(grad, np.zeros_like(state.parameters[name]), name)

    def test_linear_network_closed_form(self):
        architecture = Architecture(input_dim=3, hidden_layers=[], horizon_T=2)
        state = initialize_network(architecture, seed=0)
        batch = np.random.default_rng(2).random((4, 3))
        delta = np.array([0.5, -1.0, 2.0, 0.25])

        _, _, cache = forward(state, batch)
        grads = backward(state, cache, delta, np.zeros((4, 2)))

        np.testing.assert_allclose(grads["bottleneck.weight"][:, 0], batch.T @ delta)
        np.testing.assert_allclose(grads["bottleneck.bias"], [delta.sum()])

    def test_shape_mismatch(self):
        state = initialize_network(_architecture(), seed=0)
        _, _, cache = forward(state, np.ones((4, 3)))
        with self.assertRaises(InvalidInputException):
            backward(state, cache, np.zeros(3), np.zeros((4, 5)))


class TestPredict(unittest.TestCase):
    def setUp(self):
        self.state = initialize_network(_architecture(batch_norm=True, dropout=0.2), seed=21)

    def test_repeated_calls_identical(self):
        features = np.random.default_rng(0).random((10, 3))
        first, second = predict(self.state, features), predict(self.state, features)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_single_vector(self):
        s1, s2 = predict(self.state, np.array([0.1, 0.2, 0.3]))
        self.assertIsInstance(s1, float)
        self.assertEqual(s2.shape, (5,))

    def test_s2_inside_unit_interval(self):
        features = np.random.default_rng(1).normal(size=(1000, 3))
        _, s2 = predict(self.state, features)
        self.assertTrue(np.all((s2 > 0) & (s2 < 1)))

    def test_manifest_round_trip(self):
        update_running_statistics(
            self.state, forward(self.state, np.random.default_rng(3).random((8, 3)), train_mode=True)[2]
        )
        manifest = NetworkManifest.model_validate_json(self.state.to_manifest().model_dump_json())
        restored = manifest.to_state()
        features = np.random.default_rng(4).random((7, 3))
        np.testing.assert_array_equal(predict(restored, features)[1], predict(self.state, features)[1])

    def test_manifest_rejects_inconsistent_shapes(self):
        document = self.state.to_manifest().model_dump()
        document["tensors"]["head.bias"]["shape"] = [7]
        with self.assertRaises(ValueError):
            NetworkManifest.model_validate(document)


class TestMonotonicity(unittest.TestCase):
    def test_violation_rate(self):
        s2 = np.array([[0.9, 0.8, 0.85], [0.9, 0.7, 0.6]])
        self.assertEqual(monotonicity_violation_rate(s2), 0.25)

    def test_single_threshold(self):
        self.assertEqual(monotonicity_violation_rate(np.array([[0.3]])), 0.0)


if __name__ == '__main__':
    unittest.main()
