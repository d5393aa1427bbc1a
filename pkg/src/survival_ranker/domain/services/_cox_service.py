# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_cox_service is internal and cannot be imported directly.")

import logging

import numpy as np
from scipy import linalg

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException
from survival_ranker.domain.models.cox_model import CoxModel
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._efron import EfronPartialLikelihood

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERS = 100
DEFAULT_COEFFICIENT_BOUND = 15.0
_MAX_HALVINGS = 40


def _check_theta(theta, dataset: SurvivalDataset) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.shape[0] != dataset.feature_count:
        raise InvalidInputException(f"theta has {theta.shape[0]} entries for {dataset.feature_count} features")
    return theta


def efron_nll(theta, dataset: SurvivalDataset, l2: float = 0.0) -> float:
    """Negative Efron partial log-likelihood of theta, plus l2 * ||theta||^2."""
    theta = _check_theta(theta, dataset)
    likelihood = EfronPartialLikelihood(dataset.times, dataset.events)
    return likelihood.evaluate(dataset.features @ theta).loss + l2 * float(theta @ theta)


def efron_nll_grad(theta, dataset: SurvivalDataset, l2: float = 0.0) -> np.ndarray:
    theta = _check_theta(theta, dataset)
    likelihood = EfronPartialLikelihood(dataset.times, dataset.events)
    evaluation = likelihood.evaluate(dataset.features @ theta)
    return dataset.features.T @ evaluation.grad_log_s + 2.0 * l2 * theta


def efron_nll_hessian(theta, dataset: SurvivalDataset, l2: float = 0.0) -> np.ndarray:
    theta = _check_theta(theta, dataset)
    likelihood = EfronPartialLikelihood(dataset.times, dataset.events)
    hessian = likelihood.hessian(dataset.features, dataset.features @ theta)
    return hessian + 2.0 * l2 * np.eye(theta.shape[0])


def _newton_direction(hessian: np.ndarray, gradient: np.ndarray) -> np.ndarray:
    try:
        direction = linalg.cho_solve(linalg.cho_factor(hessian), gradient)
    except (linalg.LinAlgError, ValueError):
        # singular along one-hot blocks: take the minimum-norm step
        try:
            direction = linalg.lstsq(hessian, gradient)[0]
        except (linalg.LinAlgError, ValueError):
            direction = np.full_like(gradient, np.nan)
    if not np.all(np.isfinite(direction)) or float(direction @ gradient) <= 0:
        logging.warning("Cox fit: Newton solve failed, falling back to a gradient step")
        return gradient
    return direction


def fit_cox(
    dataset: SurvivalDataset,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
    l2: float = 0.0,
    coefficient_bound: float = DEFAULT_COEFFICIENT_BOUND,
) -> CoxModel:
    """
    Minimize the Efron negative log-likelihood by Newton iterations with step halving.

    Converged means the gradient max-norm dropped to `tolerance` within `max_iters`.
    With l2 = 0 a coefficient growing past `coefficient_bound` is reported as a
    monotone-likelihood divergence (converged = False).
    """
    if not dataset.events.any():
        raise InvalidInputException("fit_cox needs at least one uncensored record")
    if l2 < 0:
        raise InvalidInputException(f"l2 must be non-negative, got {l2}")

    likelihood = EfronPartialLikelihood(dataset.times, dataset.events)
    features = dataset.features

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        evaluation = likelihood.evaluate(features @ theta)
        loss = evaluation.loss + l2 * float(theta @ theta)
        return loss, features.T @ evaluation.grad_log_s + 2.0 * l2 * theta

    theta = np.zeros(dataset.feature_count)
    loss, gradient = objective(theta)
    descent_log = [loss]
    converged = False
    iterations = 0

    while True:
        if float(np.max(np.abs(gradient), initial=0.0)) <= tolerance:
            converged = True
            break
        if iterations >= max_iters:
            logging.warning(f"Cox fit: no convergence within {max_iters} iterations")
            break
        if l2 == 0 and float(np.max(np.abs(theta), initial=0.0)) > coefficient_bound:
            logging.warning(
                f"Cox fit: coefficients exceed {coefficient_bound} (monotone likelihood), stopping at iteration {iterations}"
            )
            break

        hessian = likelihood.hessian(features, features @ theta) + 2.0 * l2 * np.eye(theta.shape[0])
        direction = _newton_direction(hessian, gradient)
        step = 1.0
        for _ in range(_MAX_HALVINGS):
            candidate = theta - step * direction
            try:
                candidate_loss, candidate_gradient = objective(candidate)
            except NumericFailureException:
                step *= 0.5
                continue
            if candidate_loss <= loss:
                break
            # at the optimum the loss change is below rounding; accept if the gradient shrank
            rounding = 1e-12 * max(1.0, abs(loss))
            if candidate_loss - loss <= rounding and np.max(np.abs(candidate_gradient)) < np.max(np.abs(gradient)):
                break
            step *= 0.5
        else:
            logging.warning(f"Cox fit: line search stalled at iteration {iterations}")
            break

        theta, loss, gradient = candidate, candidate_loss, candidate_gradient
        descent_log.append(loss)
        iterations += 1
        logging.debug(f"Cox fit: iteration {iterations}, nll={loss:.10g}, step={step:g}")

    gradient_norm = float(np.max(np.abs(gradient), initial=0.0))
    logging.info(
        f"Cox fit finished: converged={converged}, iterations={iterations}, nll={loss:.6f}, |grad|={gradient_norm:.2e}"
    )
    return CoxModel(
        theta=theta,
        final_nll=loss,
        iterations=iterations,
        converged=converged,
        l2_penalty=l2,
        feature_names=dataset.feature_names,
        gradient_norm=gradient_norm,
        descent_log=tuple(descent_log),
    )


def predict_risk(model: CoxModel, features) -> np.ndarray | float:
    """Linear predictor theta . x (higher = higher hazard). Accepts one vector or a matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != model.theta.shape[0]:
        raise InvalidInputException(
            f"{features.shape[-1]} features given, model expects {model.theta.shape[0]}"
        )
    if features.ndim == 1:
        return float(features @ model.theta)
    return features @ model.theta
