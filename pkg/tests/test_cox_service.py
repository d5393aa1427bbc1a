import math
import unittest

import numpy as np
from scipy.optimize import minimize

import survival_fixtures
from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.models.cox_model import CoxModel, CoxModelManifest
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._cox_service import (
    efron_nll,
    efron_nll_grad,
    efron_nll_hessian,
    fit_cox,
    predict_risk,
)
from survival_ranker.domain.services._ranking_metrics import concordance_index

try:
    import lifelines
    import pandas as pd
except ImportError:  # optional oracle
    lifelines = None


class TestEfronNll(unittest.TestCase):
    def test_tied_three_subject_example(self):
        dataset = SurvivalDataset.from_arrays(np.zeros((3, 1)), [1.0, 1.0, 2.0], [True, True, True])
        self.assertAlmostEqual(efron_nll(np.zeros(1), dataset), math.log(6), places=12)
        self.assertAlmostEqual(efron_nll(np.zeros(1), dataset), 1.791759, places=6)

    def test_two_distinct_events(self):
        dataset = SurvivalDataset.from_arrays(np.zeros((2, 1)), [1.0, 2.0], [True, True])
        self.assertAlmostEqual(efron_nll(np.zeros(1), dataset), math.log(2), places=12)

    def test_all_censored_rejected(self):
        dataset = SurvivalDataset.from_arrays(np.zeros((3, 1)), [1.0, 2.0, 3.0], [False, False, False])
        with self.assertRaises(InvalidInputException):
            efron_nll(np.zeros(1), dataset)

    def test_theta_length_checked(self):
        dataset = survival_fixtures.random_dataset(0)
        with self.assertRaises(InvalidInputException):
            efron_nll(np.zeros(5), dataset)

    def test_l2_penalty_added(self):
        dataset = survival_fixtures.random_dataset(1)
        theta = np.array([0.3, -0.2, 0.1])
        self.assertAlmostEqual(
            efron_nll(theta, dataset, l2=0.5), efron_nll(theta, dataset) + 0.5 * float(theta @ theta), places=12
        )

    def test_untied_equals_exact_partial_likelihood(self):
        for seed in range(10):
            dataset = survival_fixtures.random_dataset(seed, n=30, tie_levels=None)
            theta = np.random.default_rng(seed).normal(size=3)
            expected = survival_fixtures.untied_partial_nll(dataset.features @ theta, dataset.times, dataset.events)
            actual = efron_nll(theta, dataset)
            self.assertLess(abs(actual - expected), 1e-12 * max(1.0, abs(expected)))

    def test_constant_shift_of_linear_predictor_leaves_loss_unchanged(self):
        for seed in range(10):
            dataset = survival_fixtures.random_dataset(seed, n=50, tie_levels=6)
            theta = np.random.default_rng(seed).normal(size=3)
            # a column of ones whose coefficient shifts every linear predictor by the same amount
            shifted = dataset.with_features(np.column_stack([dataset.features, np.ones(len(dataset))]))
            base = efron_nll(np.append(theta, 0.0), shifted)
            for shift in (-5.0, 0.7, 12.0):
                self.assertLess(abs(efron_nll(np.append(theta, shift), shifted) - base), 1e-10, (seed, shift))

    def test_large_scores_stay_finite(self):
        dataset = survival_fixtures.random_dataset(2)
        self.assertTrue(math.isfinite(efron_nll(np.full(3, 400.0), dataset)))


class TestEfronDerivatives(unittest.TestCase):
    def test_gradient_zero_for_identical_features(self):
        dataset = SurvivalDataset.from_arrays(np.ones((6, 2)), [1, 1, 2, 3, 4, 5], [1, 1, 0, 1, 0, 1])
        for theta in ([0.0, 0.0], [1.5, -3.0]):
            np.testing.assert_allclose(efron_nll_grad(np.array(theta), dataset), 0.0, atol=1e-12)

    def test_gradient_matches_finite_differences(self):
        for seed in range(5):
            dataset = survival_fixtures.random_dataset(seed, n=10, tie_levels=4)
            theta = np.random.default_rng(seed).normal(size=3)
            numeric = survival_fixtures.central_difference(lambda t: efron_nll(t, dataset, l2=0.1), theta)
            analytic = efron_nll_grad(theta, dataset, l2=0.1)
            self.assertLess(survival_fixtures.relative_error(analytic, numeric), 1e-6)

    def test_single_event_score(self):
        features = np.array([[1.0, 0.0], [0.0, 2.0], [3.0, 1.0]])
        dataset = SurvivalDataset.from_arrays(features, [1.0, 2.0, 3.0], [True, False, False])
        expected_score = features[0] - features.mean(axis=0)
        # the NLL gradient is minus the score
        np.testing.assert_allclose(efron_nll_grad(np.zeros(2), dataset), -expected_score, atol=1e-12)

    def test_hessian_matches_finite_differences_of_gradient(self):
        for seed in range(5):
            dataset = survival_fixtures.random_dataset(seed, n=12, tie_levels=4)
            theta = np.random.default_rng(seed).normal(size=3)
            numeric = np.column_stack([
                survival_fixtures.central_difference(lambda t, k=k: efron_nll_grad(t, dataset)[k], theta)
                for k in range(3)
            ])
            analytic = efron_nll_hessian(theta, dataset)
            self.assertLess(survival_fixtures.relative_error(analytic, numeric), 1e-6)
            np.testing.assert_allclose(analytic, analytic.T, atol=1e-12)


class TestFitCox(unittest.TestCase):
    def test_identical_features_converge_at_zero(self):
        dataset = SurvivalDataset.from_arrays(np.ones((5, 2)), [1, 2, 2, 3, 4], [1, 1, 1, 0, 1])
        model = fit_cox(dataset)
        self.assertTrue(model.converged)
        self.assertLessEqual(model.iterations, 1)
        np.testing.assert_allclose(model.theta, 0.0, atol=1e-12)

    def test_separation_reports_non_convergence(self):
        dataset = SurvivalDataset.from_arrays(np.array([[1.0], [0.0]]), [1.0, 2.0], [True, True])

        unpenalized = fit_cox(dataset)
        penalized = fit_cox(dataset, l2=0.1)

        self.assertFalse(unpenalized.converged)
        self.assertTrue(penalized.converged)
        self.assertTrue(np.all(np.isfinite(penalized.theta)))
        self.assertGreater(penalized.theta[0], 0)

    def test_descent_log_is_monotone(self):
        model = fit_cox(survival_fixtures.linear_cox_dataset(0))
        log = np.asarray(model.descent_log)
        self.assertEqual(log.size, model.iterations + 1)
        self.assertTrue(np.all(np.diff(log) <= 1e-12 * np.abs(log[:-1])))

    def test_converged_implies_small_gradient(self):
        dataset = survival_fixtures.linear_cox_dataset(1)
        model = fit_cox(dataset)
        self.assertTrue(model.converged)
        self.assertLessEqual(np.max(np.abs(efron_nll_grad(model.theta, dataset))), 1e-8)

    def test_recovers_generating_coefficients(self):
        model = fit_cox(survival_fixtures.linear_cox_dataset(2, n=400))
        np.testing.assert_allclose(model.theta, [2.0, -1.0, 0.0], atol=0.75)

    def test_scaled_features_scale_coefficients_inversely(self):
        dataset = survival_fixtures.linear_cox_dataset(3)
        model = fit_cox(dataset)
        for factor in (2.0, 0.5):
            with self.subTest(factor=factor):
                scaled = fit_cox(dataset.with_features(factor * dataset.features))
                self.assertTrue(scaled.converged)
                np.testing.assert_allclose(scaled.theta, model.theta / factor, atol=1e-6)

    def test_matches_derivative_free_minimum(self):
        dataset = survival_fixtures.random_dataset(42, n=50, d=3, tie_levels=10, censoring=0.3)
        model = fit_cox(dataset)

        best = None
        for start in ([0.0, 0.0, 0.0], [1.0, -1.0, 0.5], [-1.0, 1.0, -0.5]):
            result = minimize(
                efron_nll, np.array(start), args=(dataset,), method="Nelder-Mead",
                options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 20000, "maxfev": 40000},
            )
            if best is None or result.fun < best.fun:
                best = result

        self.assertTrue(model.converged)
        np.testing.assert_allclose(model.theta, best.x, atol=1e-4)
        self.assertLessEqual(model.final_nll, best.fun + 1e-9)

    @unittest.skipUnless(lifelines, "lifelines not installed")
    def test_matches_lifelines(self):
        dataset = survival_fixtures.random_dataset(7, n=60, d=3, tie_levels=10)
        frame = pd.DataFrame(dataset.features, columns=["a", "b", "c"])
        frame["T"] = dataset.times
        frame["E"] = dataset.events.astype(int)

        reference = lifelines.CoxPHFitter().fit(frame, duration_col="T", event_col="E")
        model = fit_cox(dataset)

        np.testing.assert_allclose(model.theta, reference.params_[["a", "b", "c"]].to_numpy(), atol=1e-4)

    def test_all_censored_rejected(self):
        dataset = SurvivalDataset.from_arrays(np.zeros((2, 1)), [1.0, 2.0], [False, False])
        with self.assertRaises(InvalidInputException):
            fit_cox(dataset)


class TestPredictRisk(unittest.TestCase):
    def setUp(self):
        self.model = CoxModel(theta=np.array([0.0, 1.0, 0.0]), final_nll=0.0, iterations=0, converged=True, l2_penalty=0.0)

    def test_zero_model(self):
        zero = CoxModel(theta=np.zeros(3), final_nll=0.0, iterations=0, converged=True, l2_penalty=0.0)
        self.assertEqual(predict_risk(zero, np.array([4.0, -2.0, 7.0])), 0.0)

    def test_unit_vector_projects(self):
        self.assertEqual(predict_risk(self.model, np.array([4.0, -2.0, 7.0])), -2.0)
        np.testing.assert_array_equal(predict_risk(self.model, np.eye(3)), [0.0, 1.0, 0.0])

    def test_length_mismatch(self):
        with self.assertRaises(InvalidInputException):
            predict_risk(self.model, np.array([1.0, 2.0]))

    def test_constant_feature_does_not_change_ranking(self):
        dataset = survival_fixtures.random_dataset(3)
        model = fit_cox(dataset, l2=0.01)
        shifted = CoxModel(
            theta=np.append(model.theta, 2.5), final_nll=0.0, iterations=0, converged=True, l2_penalty=0.0
        )
        augmented = np.column_stack([dataset.features, np.full(len(dataset), 3.0)])

        original = concordance_index(dataset.times, dataset.events, predict_risk(model, dataset.features))
        with_constant = concordance_index(dataset.times, dataset.events, predict_risk(shifted, augmented))

        self.assertEqual(original, with_constant)

    def test_manifest_round_trip(self):
        model = fit_cox(survival_fixtures.random_dataset(4), l2=0.01)
        restored = CoxModelManifest.model_validate_json(model.to_manifest().model_dump_json()).to_model()
        np.testing.assert_array_equal(restored.theta, model.theta)
        self.assertEqual(restored.feature_names, model.feature_names)


if __name__ == '__main__':
    unittest.main()
