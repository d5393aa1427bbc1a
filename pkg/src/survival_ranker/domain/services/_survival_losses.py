# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_survival_losses is internal and cannot be imported directly.")

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.models.network import NetworkState, RankOrientation, S1Mode, TrainConfig
from survival_ranker.domain.models.survival_dataset import LabelMatrix
from survival_ranker.domain.services._efron import EfronPartialLikelihood

HAZARD_EPSILON = 1e-8


@dataclass(frozen=True)
class LossTerm:
    """A loss value with its gradient. `skipped` marks a batch the term could not score."""

    loss: float
    gradient: np.ndarray
    skipped: bool = False


@dataclass(frozen=True)
class CombinedLoss:
    total: float
    efron: LossTerm
    rank: LossTerm
    penalty: float
    grad_s1: np.ndarray
    grad_s2: np.ndarray
    penalty_grads: dict[str, np.ndarray]


def positive_scores(s1, s1_mode: S1Mode) -> tuple[np.ndarray, np.ndarray]:
    """
    :return: log s and d(log s)/d(s1) for the positive Efron score s derived from s1.
    """
    s1 = np.asarray(s1, dtype=np.float64).reshape(-1)
    if s1_mode == S1Mode.LOG_HAZARD:
        return s1, np.ones_like(s1)
    s = np.logaddexp(0.0, s1) + HAZARD_EPSILON
    return np.log(s), expit(s1) / s


def efron_batch_loss(s1, batch_times, batch_events, s1_mode: S1Mode = S1Mode.LOG_HAZARD) -> LossTerm:
    """
    Negative Efron partial log-likelihood over one batch, risk sets and tie groups
    taken within the batch. A batch without events is skipped with loss 0.
    """
    s1 = np.asarray(s1, dtype=np.float64).reshape(-1)
    batch_events = np.asarray(batch_events).astype(bool).reshape(-1)
    if s1.shape != batch_events.shape:
        raise InvalidInputException(f"{s1.shape[0]} scores for {batch_events.shape[0]} records")
    if not batch_events.any():
        return LossTerm(loss=0.0, gradient=np.zeros_like(s1), skipped=True)

    log_s, slope = positive_scores(s1, s1_mode)
    evaluation = EfronPartialLikelihood(batch_times, batch_events).evaluate(log_s)
    return LossTerm(loss=evaluation.loss, gradient=evaluation.grad_log_s * slope)


def ranking_loss(
    s2,
    labels: LabelMatrix,
    orientation: RankOrientation = RankOrientation.SURVIVOR_MINUS_EVENT,
) -> LossTerm:
    """
    Mean squared distance to margin 1 over acceptable pairs, threshold by threshold.

    At threshold t the pair (i, j) is acceptable when both labels are observed,
    i survived past t and j had its event by t. With survivor-minus-event orientation
    the pair contributes (s2[i, t] - s2[j, t] - 1)^2. No acceptable pair gives loss 0, skipped.
    """
    s2 = np.asarray(s2, dtype=np.float64)
    if s2.shape != labels.labels.shape:
        raise InvalidInputException(f"s2 shape {s2.shape} does not match labels {labels.labels.shape}")
    if s2.shape[0] < 2:
        raise InvalidInputException("ranking loss needs at least two records")

    sign = 1.0 if orientation == RankOrientation.SURVIVOR_MINUS_EVENT else -1.0
    survivors = (labels.mask & (labels.labels == 1)).astype(np.float64)
    failures = (labels.mask & (labels.labels == 0)).astype(np.float64)
    n_survivors = survivors.sum(axis=0)
    n_failures = failures.sum(axis=0)
    pairs = float(np.sum(n_survivors * n_failures))
    if pairs == 0:
        return LossTerm(loss=0.0, gradient=np.zeros_like(s2), skipped=True)

    # sum over pairs of (a_i - b_j - sign)^2, expanded so each threshold costs O(batch)
    shifted = (s2 - sign) * survivors
    failed = s2 * failures
    sum_shifted, sum_failed = shifted.sum(axis=0), failed.sum(axis=0)
    total = np.sum(
        n_failures * (shifted ** 2).sum(axis=0)
        - 2.0 * sum_shifted * sum_failed
        + n_survivors * (failed ** 2).sum(axis=0)
    )
    gradient = survivors * 2.0 * (n_failures * (s2 - sign) - sum_failed)
    gradient -= failures * 2.0 * (sum_shifted - n_survivors * s2)
    return LossTerm(loss=float(total) / pairs, gradient=gradient / pairs)


def weight_penalty(state: NetworkState, l1: float, l2: float) -> tuple[float, dict[str, np.ndarray]]:
    """L1 and squared-L2 penalties on weight matrices (biases and batch-norm terms excluded)."""
    value = 0.0
    grads: dict[str, np.ndarray] = {}
    if l1 == 0 and l2 == 0:
        return value, grads
    for name in state.weight_names():
        weight = state.parameters[name]
        value += l1 * float(np.abs(weight).sum()) + l2 * float(np.sum(weight ** 2))
        grads[name] = l1 * np.sign(weight) + 2.0 * l2 * weight
    return value, grads


def combined_loss(
    s1,
    s2,
    batch_times,
    batch_events,
    labels: LabelMatrix,
    state: NetworkState,
    config: TrainConfig,
) -> CombinedLoss:
    """efron_weight * Efron + lambda_rank * ranking + weight penalties, with composed gradients."""
    efron = (
        efron_batch_loss(s1, batch_times, batch_events, state.architecture.s1_mode)
        if config.efron_weight > 0
        else LossTerm(loss=0.0, gradient=np.zeros(np.shape(s1)), skipped=True)
    )
    rank = (
        ranking_loss(s2, labels, config.rank_orientation)
        if config.lambda_rank > 0
        else LossTerm(loss=0.0, gradient=np.zeros(np.shape(s2)), skipped=True)
    )
    penalty, penalty_grads = weight_penalty(state, config.l1, config.l2)
    total = config.efron_weight * efron.loss + config.lambda_rank * rank.loss + penalty
    return CombinedLoss(
        total=total,
        efron=efron,
        rank=rank,
        penalty=penalty,
        grad_s1=config.efron_weight * efron.gradient,
        grad_s2=config.lambda_rank * rank.gradient,
        penalty_grads=penalty_grads,
    )
