# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_search_service is internal and cannot be imported directly.")

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from survival_ranker.domain.exceptions.search_failed_exception import SearchFailedException
from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException
from survival_ranker.domain.models.experiment_config import ExperimentConfig, RealRange, SearchSpace, TrialRecord
from survival_ranker.domain.models.network import HiddenLayer
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._training_service import train


def _draw(rng: np.random.Generator, bounds: RealRange) -> float:
    if bounds.log:
        return float(np.exp(rng.uniform(np.log(bounds.low), np.log(bounds.high))))
    return float(rng.uniform(bounds.low, bounds.high))


def _choose(rng: np.random.Generator, options: list):
    return options[int(rng.integers(len(options)))]


def sample_config(space: SearchSpace, trial: int) -> ExperimentConfig:
    """Experiment config of one trial, drawn from the stream (space.seed, trial)."""
    rng = np.random.default_rng(np.random.SeedSequence([space.seed, trial]))
    depth = _choose(rng, space.depths)
    activation = _choose(rng, space.activations)
    batch_norm = _choose(rng, space.batch_norm)
    dropout = _draw(rng, space.dropout)
    layers = [
        HiddenLayer(width=_choose(rng, space.widths), activation=activation, dropout=dropout, batch_norm=batch_norm)
        for _ in range(depth)
    ]
    base = space.experiment
    train_config = base.train.model_copy(update={
        "learning_rate": _draw(rng, space.learning_rate),
        "batch_size": _choose(rng, space.batch_sizes),
        "lambda_rank": _draw(rng, space.lambda_rank),
        "l1": _draw(rng, space.l1),
        "l2": _draw(rng, space.l2),
        "clip_norm": _draw(rng, space.clip_norm),
    })
    network = base.network.model_copy(update={"hidden_layers": layers, "s1_mode": _choose(rng, space.s1_modes)})
    return base.model_copy(update={"train": train_config, "network": network})


def _record(trial: int, config: ExperimentConfig, **outcome) -> TrialRecord:
    train_config = config.effective_train_config()
    layers = config.network.hidden_layers
    return TrialRecord(
        trial=trial,
        learning_rate=train_config.learning_rate,
        batch_size=train_config.batch_size,
        lambda_rank=train_config.lambda_rank,
        l1=train_config.l1,
        l2=train_config.l2,
        clip_norm=train_config.clip_norm,
        depth=len(layers),
        widths="-".join(str(layer.width) for layer in layers),
        activation=layers[0].activation.value if layers else "",
        dropout=layers[0].dropout if layers else 0.0,
        batch_norm=layers[0].batch_norm if layers else False,
        s1_mode=config.network.s1_mode.value,
        **outcome,
    )


def run_trial(space: SearchSpace, trial: int, train_set: SurvivalDataset, validation_set: SurvivalDataset) -> TrialRecord:
    """Train one sampled config; failures are recorded, not raised."""
    config = sample_config(space, trial)
    architecture = config.network.architecture(train_set.feature_count, train_set.horizon_T)
    try:
        _, history = train(train_set, validation_set, architecture, config.effective_train_config(), trial=trial)
    except SurvivalRankerException as e:
        logging.warning(f"Search: trial {trial} failed: {e.message}")
        return _record(trial, config, status="failed", error=e.message)
    logging.info(f"Search: trial {trial} validation C-index {history.best_validation:.4f}")
    return _record(
        trial,
        config,
        status="ok",
        validation_c_index=history.best_validation,
        chosen_epoch=history.chosen_epoch,
        epochs=len(history.epochs),
    )


def random_search(
    space: SearchSpace,
    train_set: SurvivalDataset,
    validation_set: SurvivalDataset,
    workers: int | None = None,
) -> tuple[ExperimentConfig, list[TrialRecord]]:
    """
    Run every trial of the budget and return the best config with the trial table.
    Ties on validation C-index go to the lower trial index.

    :raises SearchFailedException: when every trial failed.
    """
    workers = workers or space.workers
    trials = list(range(space.trials))
    if workers == 1:
        records = [run_trial(space, trial, train_set, validation_set) for trial in trials]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_trial, space, trial, train_set, validation_set) for trial in trials]
            records = [future.result() for future in futures]

    succeeded = [r for r in records if r.status == "ok"]
    if not succeeded:
        raise SearchFailedException(
            f"all {len(records)} search trials failed",
            diagnostics=[f"trial {r.trial}: {r.error}" for r in records],
        )
    best = max(succeeded, key=lambda r: (r.validation_c_index, -r.trial))
    logging.info(f"Search: best trial {best.trial} with validation C-index {best.validation_c_index:.4f}")
    return sample_config(space, best.trial), records
