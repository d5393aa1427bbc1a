# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_survival_estimation is internal and cannot be imported directly.")

import logging
import math

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.models.survival_dataset import KMCurve, LabelMatrix, SurvivalDataset


def discretize_time(observed_time: float, unit_length: float) -> int:
    """
    Index of the time unit containing `observed_time` (floor binning).

    :param observed_time: Non-negative observed time in dataset units.
    :param unit_length: Length of one discrete time unit.
    :return: floor(observed_time / unit_length).
    """
    if not unit_length > 0:
        raise InvalidInputException(f"unit_length must be positive, got {unit_length}")
    if not math.isfinite(observed_time) or observed_time < 0:
        raise InvalidInputException(f"observed_time must be finite and non-negative, got {observed_time}")
    return int(math.floor(observed_time / unit_length))


def discretize_times(times, unit_length: float) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    if not unit_length > 0:
        raise InvalidInputException(f"unit_length must be positive, got {unit_length}")
    if not np.all(np.isfinite(times)) or np.any(times < 0):
        raise InvalidInputException("observed times must be finite and non-negative")
    return np.floor(times / unit_length).astype(np.int64)


def survival_labels(dataset: SurvivalDataset, unit_length: float | None = None) -> LabelMatrix:
    """
    Build the per-threshold survival targets of the survival head.

    An event in bin b is labelled alive for thresholds t < b and dead from b on,
    every threshold observable. A record censored in bin b is known alive for
    t < b and unobservable afterwards.
    """
    if len(dataset) == 0:
        raise InvalidInputException("Cannot build survival labels for an empty dataset")
    if dataset.horizon_T <= 0:
        raise InvalidInputException("horizon_T must be positive")

    unit = dataset.unit_length if unit_length is None else unit_length
    bins = discretize_times(dataset.times, unit)
    if np.any(bins >= dataset.horizon_T):
        raise InvalidInputException(f"Observed times exceed the horizon of {dataset.horizon_T} units")

    thresholds = np.arange(dataset.horizon_T)[None, :]
    alive = thresholds < bins[:, None]
    mask = alive | dataset.events[:, None]
    labels = alive.astype(np.int8)
    return LabelMatrix(labels=labels, mask=mask)


def kaplan_meier(dataset: SurvivalDataset) -> KMCurve:
    """
    Product-limit estimate S(t_i) = S(t_{i-1}) * (1 - d_i / n_i).

    Censored subjects whose time equals an event time stay in the risk set n_i.
    """
    if len(dataset) == 0:
        raise InvalidInputException("Kaplan-Meier needs at least one record")

    times = dataset.times
    events = dataset.events
    event_times = dataset.unique_event_times
    sorted_times = np.sort(times)
    at_risk = (times.shape[0] - np.searchsorted(sorted_times, event_times, side="left")).astype(np.int64)
    deaths = np.array([dataset.tie_groups[float(t)].size for t in event_times], dtype=np.int64)

    survival = np.empty(event_times.shape[0], dtype=np.float64)
    previous = 1.0
    for k in range(event_times.shape[0]):
        previous = previous * (1.0 - deaths[k] / at_risk[k])
        survival[k] = previous

    logging.debug(f"Kaplan-Meier over {len(dataset)} records, {int(events.sum())} events")
    return KMCurve(times=event_times.copy(), survival=survival, at_risk=at_risk, events=deaths)
