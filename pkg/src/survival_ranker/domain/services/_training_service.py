# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_training_service is internal and cannot be imported directly.")

import logging
import math

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException
from survival_ranker.domain.exceptions.training_aborted_exception import TrainingAbortedException
from survival_ranker.domain.models.network import (
    Architecture,
    EpochRecord,
    NetworkState,
    SelectionScore,
    TrainConfig,
    TrainHistory,
)
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._network import (
    backward,
    forward,
    initialize_network,
    predict,
    update_running_statistics,
)
from survival_ranker.domain.services._optimizers import AdamMoments, adam_step, clip_gradients
from survival_ranker.domain.services._ranking_metrics import concordance_index
from survival_ranker.domain.services._survival_estimation import survival_labels
from survival_ranker.domain.services._survival_losses import combined_loss


def batch_slices(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    """Consecutive batches of `order`; a tail shorter than 2 joins the previous batch."""
    batches = [order[k:k + batch_size] for k in range(0, order.shape[0], batch_size)]
    if len(batches) > 1 and batches[-1].shape[0] < 2:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def risk_scores(state: NetworkState, features, selection: SelectionScore = SelectionScore.S1) -> np.ndarray:
    """Eval-mode risk (higher = earlier event): s1, or minus the mean survival head output."""
    s1, s2 = predict(state, np.atleast_2d(features))
    if selection == SelectionScore.S2_MEAN:
        return -s2.mean(axis=1)
    return s1


def train(
    train_set: SurvivalDataset,
    validation_set: SurvivalDataset,
    architecture: Architecture,
    config: TrainConfig,
    trial: int = 0,
) -> tuple[NetworkState, TrainHistory]:
    """
    Mini-batch Adam on the combined loss with early stopping on validation C-index.

    Every random stream (initialization, shuffling, dropout) derives from (config.seed, trial).
    Returns the parameters of the best validation epoch.

    :raises TrainingAbortedException: a batch produced a non-finite loss or gradient.
    """
    if len(train_set) < 2:
        raise InvalidInputException("training needs at least two records")
    if len(validation_set) == 0:
        raise InvalidInputException("validation split is empty")
    if architecture.input_dim != train_set.feature_count:
        raise InvalidInputException(
            f"architecture expects {architecture.input_dim} features, dataset has {train_set.feature_count}"
        )
    if architecture.horizon_T != train_set.horizon_T:
        raise InvalidInputException(
            f"architecture horizon {architecture.horizon_T} differs from dataset horizon {train_set.horizon_T}"
        )

    init_seed, shuffle_seed, dropout_seed = np.random.SeedSequence([config.seed, trial]).spawn(3)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    dropout_rng = np.random.default_rng(dropout_seed)

    state = initialize_network(architecture, init_seed)
    state.training = True
    moments = AdamMoments.zeros_like(state)
    labels = survival_labels(train_set)
    history = TrainHistory()
    best_state = state.copy()
    best_score = -math.inf
    step_count = 0

    for epoch in range(config.max_epochs):
        sums = {"efron": 0.0, "rank": 0.0, "penalty": 0.0, "total": 0.0}
        skipped_efron = skipped_rank = 0
        batches = batch_slices(shuffle_rng.permutation(len(train_set)), config.batch_size)
        for rows in batches:
            try:
                s1, s2, cache = forward(state, train_set.features[rows], train_mode=True, rng=dropout_rng)
                loss = combined_loss(
                    s1, s2, train_set.times[rows], train_set.events[rows], labels.rows(rows), state, config
                )
                if not math.isfinite(loss.total):
                    raise NumericFailureException(f"non-finite training loss {loss.total}")
                grads = backward(state, cache, loss.grad_s1, loss.grad_s2)
                for name, penalty_grad in loss.penalty_grads.items():
                    grads[name] = grads[name] + penalty_grad
                grads = clip_gradients(grads, config.clip_norm)
                step_count += 1
                adam_step(state, grads, config.learning_rate, step_count, moments)
            except NumericFailureException as e:
                logging.error(f"Training: aborted in epoch {epoch}: {e.message}")
                state.training = False
                raise TrainingAbortedException(f"training aborted in epoch {epoch}: {e.message}", history=history) from e
            update_running_statistics(state, cache, config.bn_momentum)

            skipped_efron += int(loss.efron.skipped and config.efron_weight > 0)
            skipped_rank += int(loss.rank.skipped and config.lambda_rank > 0)
            sums["efron"] += loss.efron.loss
            sums["rank"] += loss.rank.loss
            sums["penalty"] += loss.penalty
            sums["total"] += loss.total

        if skipped_efron:
            logging.info(f"Training: epoch {epoch} skipped {skipped_efron} Efron batches without events")

        state.training = False
        score = concordance_index(
            validation_set.times,
            validation_set.events,
            risk_scores(state, validation_set.features, config.selection_score),
        )
        state.training = True
        count = len(batches)
        history.epochs.append(EpochRecord(
            epoch=epoch,
            efron_loss=sums["efron"] / count,
            rank_loss=sums["rank"] / count,
            penalty=sums["penalty"] / count,
            total_loss=sums["total"] / count,
            skipped_efron_batches=skipped_efron,
            skipped_rank_batches=skipped_rank,
            validation_c_index=score,
        ))
        logging.debug(f"Training: epoch {epoch}, loss={sums['total'] / count:.6f}, validation C-index={score:.4f}")

        if score > best_score:
            best_score = score
            best_state = state.copy()
            history.chosen_epoch = epoch
        if epoch - history.chosen_epoch >= config.patience:
            history.stopped_early = epoch + 1 < config.max_epochs
            break

    if history.stopped_early:
        logging.info(f"Training: early stop after {len(history.epochs)} epochs")
    logging.info(
        f"Training finished: chosen epoch {history.chosen_epoch}, validation C-index {best_score:.4f}"
    )
    best_state.training = False
    return best_state, history
