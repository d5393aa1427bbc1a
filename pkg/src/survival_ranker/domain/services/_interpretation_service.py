# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_interpretation_service is internal and cannot be imported directly.")

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.interfaces.abstract_risk_predictor import AbstractRiskPredictor
from survival_ranker.domain.models.experiment_config import VimpConfig
from survival_ranker.domain.models.reports import MedianSurvival, StrataCurves, StratumCurve, VimpEntry, VimpReport
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._ranking_metrics import concordance_index


def perturb_continuous(column, sigma: float, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Add independent N(0, (sigma * epsilon)^2) noise to every entry."""
    if epsilon <= 0:
        raise InvalidInputException(f"epsilon must be positive, got {epsilon}")
    column = np.asarray(column, dtype=np.float64)
    scale = sigma * epsilon
    if scale == 0:
        return column.copy()
    return column + rng.normal(0.0, scale, size=column.shape)


def perturb_discrete(column, flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    """x (1 - s) + (1 - x) s with s ~ Bernoulli(flip_prob), independently per entry."""
    column = np.asarray(column, dtype=np.float64)
    if not 0 <= flip_prob <= 1:
        raise InvalidInputException(f"flip_prob must lie in [0, 1], got {flip_prob}")
    if not np.all((column == 0) | (column == 1)):
        raise InvalidInputException("perturb_discrete expects a 0/1 column")
    flips = (rng.random(column.shape) < flip_prob).astype(np.float64)
    return column * (1.0 - flips) + (1.0 - column) * flips


def vimp(
    predictor: AbstractRiskPredictor,
    dataset: SurvivalDataset,
    feature: str,
    config: VimpConfig,
    binary_features: frozenset[str] = frozenset(),
) -> VimpEntry:
    """
    Increase of 1 - C-index when one feature is perturbed, averaged over repetitions.
    Features in `binary_features` are flipped, all others get Gaussian noise.
    The predictor is only queried, never refitted.
    """
    if feature not in dataset.feature_names:
        raise InvalidInputException(f"unknown feature {feature!r}")
    index = dataset.feature_names.index(feature)
    baseline = 1.0 - concordance_index(dataset.times, dataset.events, predictor.predict_risk(dataset.features))

    column = dataset.features[:, index]
    binary = feature in binary_features
    sigma = float(np.std(column))
    errors = []
    for repetition in range(config.repetitions):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, index, repetition]))
        perturbed = dataset.features.copy()
        if binary:
            perturbed[:, index] = perturb_discrete(column, config.flip_prob, rng)
        else:
            perturbed[:, index] = perturb_continuous(column, sigma, config.epsilon, rng)
        errors.append(1.0 - concordance_index(dataset.times, dataset.events, predictor.predict_risk(perturbed)))

    # averaged as offsets from the baseline so an uninfluential feature scores exactly 0
    perturbed_error = baseline + float(np.mean(np.asarray(errors) - baseline))
    return VimpEntry(
        feature=feature,
        baseline_error=baseline,
        perturbed_error=perturbed_error,
        vimp=perturbed_error - baseline,
        vimp_sd=float(np.std(errors, ddof=1)) if len(errors) > 1 else 0.0,
    )


def vimp_report(
    predictor: AbstractRiskPredictor,
    dataset: SurvivalDataset,
    config: VimpConfig,
    feature_names: list[str] | None = None,
    binary_features: frozenset[str] = frozenset(),
) -> VimpReport:
    """VIMP of every feature, computed in parallel and sorted by decreasing vimp."""
    names = list(feature_names or dataset.feature_names)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        entries = list(pool.map(lambda name: vimp(predictor, dataset, name, config, binary_features), names))
    entries.sort(key=lambda entry: -entry.vimp)
    logging.info(f"VIMP computed for {len(entries)} features over {config.repetitions} repetitions")
    return VimpReport(
        entries=entries,
        epsilon=config.epsilon,
        flip_prob=config.flip_prob,
        seed=config.seed,
        repetitions=config.repetitions,
        split=config.split,
    )


def strata_curves(
    predictor: AbstractRiskPredictor,
    dataset: SurvivalDataset,
    feature: str,
    bin_edges: list[float],
) -> StrataCurves:
    """
    Mean predicted survival curve per stratum [edge_k, edge_k+1) of one feature;
    the last stratum is closed on the right. Empty strata carry no curve.
    """
    if feature not in dataset.feature_names:
        raise InvalidInputException(f"unknown feature {feature!r}")
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise InvalidInputException("bin_edges must hold at least two strictly increasing values")

    column = dataset.features[:, dataset.feature_names.index(feature)]
    survival = predictor.predict_survival(dataset.features)
    strata = []
    for k in range(edges.size - 1):
        lower, upper = float(edges[k]), float(edges[k + 1])
        last = k == edges.size - 2
        members = (column >= lower) & ((column <= upper) if last else (column < upper))
        size = int(members.sum())
        if size == 0:
            logging.warning(f"Strata: no record of {feature} in [{lower}, {upper}]")
        strata.append(StratumCurve(
            lower=lower,
            upper=upper,
            size=size,
            curve=survival[members].mean(axis=0).tolist() if size else None,
        ))
    return StrataCurves(feature=feature, bin_edges=edges.tolist(), strata=strata)


def median_survival(s2) -> int | None:
    """Smallest threshold where the survival curve drops below 0.5, None if it never does."""
    s2 = np.asarray(s2, dtype=np.float64).reshape(-1)
    below = np.flatnonzero(s2 < 0.5)
    return int(below[0]) if below.size else None


def median_survival_curve(s2) -> MedianSurvival:
    s2 = np.atleast_2d(np.asarray(s2, dtype=np.float64))
    return MedianSurvival(
        per_individual=[median_survival(row) for row in s2],
        population=median_survival(s2.mean(axis=0)),
    )
