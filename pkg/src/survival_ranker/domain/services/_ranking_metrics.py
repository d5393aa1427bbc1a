# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_ranking_metrics is internal and cannot be imported directly.")

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.undefined_metric_exception import UndefinedMetricException
from survival_ranker.domain.models.survival_dataset import LabelMatrix

_CHUNK = 1024


def _as_survival_vectors(times, events) -> tuple[np.ndarray, np.ndarray]:
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    events = np.asarray(events).astype(bool).reshape(-1)
    if times.shape != events.shape:
        raise InvalidInputException(f"times and events differ in length: {times.size} vs {events.size}")
    return times, events


def admissible_pairs(times, events) -> set[tuple[int, int]]:
    """
    Ordered pairs (earlier, later) whose event order is known despite censoring.

    The earlier record must be an observed event. Equal times are admissible only
    when the event record is paired with a censored one (censoring after the event).
    """
    times, events = _as_survival_vectors(times, events)
    pairs: set[tuple[int, int]] = set()
    for i in np.flatnonzero(events):
        later = (times > times[i]) | ((times == times[i]) & ~events)
        pairs.update((int(i), int(j)) for j in np.flatnonzero(later))
    return pairs


def _pair_counts(times: np.ndarray, events: np.ndarray, risk: np.ndarray) -> tuple[int, int, int]:
    admissible = correct = tied = 0
    event_rows = np.flatnonzero(events)
    for start in range(0, event_rows.size, _CHUNK):
        rows = event_rows[start:start + _CHUNK]
        t_i = times[rows][:, None]
        comparable = (times[None, :] > t_i) | ((times[None, :] == t_i) & ~events[None, :])
        r_i = risk[rows][:, None]
        admissible += int(np.count_nonzero(comparable))
        correct += int(np.count_nonzero(comparable & (r_i > risk[None, :])))
        tied += int(np.count_nonzero(comparable & (r_i == risk[None, :])))
    return admissible, correct, tied


def concordance_index(times, events, risk_scores) -> float:
    """
    Harrell's C-index for right-censored data.

    A pair is concordant when the record with the earlier event has the higher
    risk score; equal risk scores count half.

    :raises UndefinedMetricException: when no admissible pair exists.
    """
    times, events = _as_survival_vectors(times, events)
    risk = np.asarray(risk_scores, dtype=np.float64).reshape(-1)
    if risk.shape != times.shape:
        raise InvalidInputException(f"risk_scores length {risk.size} does not match {times.size} records")
    if not np.all(np.isfinite(risk)):
        raise InvalidInputException("risk_scores contain non-finite values")

    admissible, correct, tied = _pair_counts(times, events, risk)
    if admissible == 0:
        raise UndefinedMetricException("C-index undefined: no admissible pairs")
    return (correct + 0.5 * tied) / admissible


def _auroc(positive_scores: np.ndarray, negative_scores: np.ndarray, threshold_bin: int) -> float:
    if positive_scores.size == 0 or negative_scores.size == 0:
        raise UndefinedMetricException(
            f"AUROC undefined at threshold {threshold_bin}: "
            f"{positive_scores.size} positives, {negative_scores.size} negatives"
        )
    ordered = np.sort(negative_scores)
    below = np.searchsorted(ordered, positive_scores, side="left")
    below_or_equal = np.searchsorted(ordered, positive_scores, side="right")
    correct = int(below.sum())
    tied = int((below_or_equal - below).sum())
    return (correct + 0.5 * tied) / (positive_scores.size * negative_scores.size)


def _threshold_scores(threshold_bin: int, label_matrix: LabelMatrix, scores_at_t) -> np.ndarray:
    if not 0 <= threshold_bin < label_matrix.horizon_T:
        raise InvalidInputException(f"threshold_bin {threshold_bin} outside [0, {label_matrix.horizon_T})")
    scores = np.asarray(scores_at_t, dtype=np.float64).reshape(-1)
    if scores.shape[0] != label_matrix.labels.shape[0]:
        raise InvalidInputException(
            f"{scores.shape[0]} scores for {label_matrix.labels.shape[0]} labelled records"
        )
    return scores


def censored_auroc_at(threshold_bin: int, label_matrix: LabelMatrix, scores_at_t) -> float:
    """
    Probability that a survivor at `threshold_bin` scores at least as high as a
    record whose event happened by then. Only observable labels take part; ties count half.
    """
    scores = _threshold_scores(threshold_bin, label_matrix, scores_at_t)
    observed = label_matrix.mask[:, threshold_bin]
    alive = label_matrix.labels[:, threshold_bin] == 1
    return _auroc(scores[observed & alive], scores[observed & ~alive], threshold_bin)


def uncensored_auroc_at(threshold_bin: int, label_matrix: LabelMatrix, scores_at_t) -> float:
    """Same as `censored_auroc_at` but hidden labels of censored records count as survivors."""
    scores = _threshold_scores(threshold_bin, label_matrix, scores_at_t)
    dead = label_matrix.mask[:, threshold_bin] & (label_matrix.labels[:, threshold_bin] == 0)
    return _auroc(scores[~dead], scores[dead], threshold_bin)


def auroc_series(label_matrix: LabelMatrix, scores, censored: bool = True) -> list[float | None]:
    """
    AUROC at every threshold of the horizon; undefined thresholds are gaps (None).

    :param scores: records × horizon_T survival scores (higher = longer survival).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = np.repeat(scores[:, None], label_matrix.horizon_T, axis=1)
    metric = censored_auroc_at if censored else uncensored_auroc_at
    series: list[float | None] = []
    for t in range(label_matrix.horizon_T):
        try:
            series.append(metric(t, label_matrix, scores[:, t]))
        except UndefinedMetricException:
            series.append(None)
    return series
