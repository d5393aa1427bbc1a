# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_efron is internal and cannot be imported directly.")

from dataclasses import dataclass

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException


@dataclass(frozen=True)
class EfronEvaluation:
    loss: float
    grad_log_s: np.ndarray
    risk_weight: np.ndarray
    scale: np.ndarray


class EfronPartialLikelihood:
    """
    Negative Efron partial log-likelihood as a function of log-scores.

    With s_i the subject scores, t_j the unique event times and H_j the events at t_j
    (m_j = |H_j|), the loss is

        sum_j [ -sum_{i in H_j} log s_i
                + sum_{l=0}^{m_j-1} log( sum_{Y_i >= t_j} s_i - l/m_j * sum_{i in H_j} s_i ) ].

    Risk sets come from one suffix sum over records sorted by time. Scores enter
    as log s and are shifted by their maximum before exponentiation.
    """

    def __init__(self, times, events) -> None:
        times = np.asarray(times, dtype=np.float64).reshape(-1)
        events = np.asarray(events).astype(bool).reshape(-1)
        if times.shape != events.shape:
            raise InvalidInputException("times and events differ in length")
        if not events.any():
            raise InvalidInputException("Efron partial likelihood needs at least one uncensored record")

        self.size = times.shape[0]
        self.events = events
        self.order = np.argsort(times, kind="stable")
        self.event_rows = np.flatnonzero(events)
        self.event_times = np.unique(times[events])
        self.starts = np.searchsorted(times[self.order], self.event_times, side="left")
        self.group_of_event = np.searchsorted(self.event_times, times[self.event_rows])

        ties = np.bincount(self.group_of_event, minlength=self.event_times.size)
        offsets = np.cumsum(ties) - ties
        self.term_group = np.repeat(np.arange(self.event_times.size), ties)
        term_rank = np.arange(self.term_group.size) - offsets[self.term_group]
        self.term_fraction = term_rank / ties[self.term_group]

    @property
    def groups(self) -> int:
        return int(self.event_times.size)

    def _denominators(self, scaled: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        suffix = np.cumsum(scaled[self.order][::-1])[::-1]
        risk = suffix[self.starts]
        tied = np.bincount(self.group_of_event, weights=scaled[self.event_rows], minlength=self.groups)
        return risk[self.term_group] - self.term_fraction * tied[self.term_group], tied

    def evaluate(self, log_s) -> EfronEvaluation:
        """
        :param log_s: log-scores, one per record.
        :return: loss, its gradient with respect to log_s, and the per-record
                 risk weights reused by the Hessian.
        """
        log_s = np.asarray(log_s, dtype=np.float64).reshape(-1)
        if log_s.shape[0] != self.size:
            raise InvalidInputException(f"{log_s.shape[0]} scores for {self.size} records")
        if not np.all(np.isfinite(log_s)):
            raise NumericFailureException("non-finite score in Efron partial likelihood")

        shift = log_s.max()
        scaled = np.exp(log_s - shift)
        denominators, _ = self._denominators(scaled)
        if np.any(denominators <= 0):
            raise NumericFailureException("non-positive risk-set sum in Efron partial likelihood")

        loss = float(-log_s[self.event_rows].sum() + np.sum(np.log(denominators) + shift))
        if not np.isfinite(loss):
            raise NumericFailureException("non-finite Efron partial likelihood")

        inverse = 1.0 / denominators
        inverse_by_group = np.bincount(self.term_group, weights=inverse, minlength=self.groups)
        fraction_by_group = np.bincount(self.term_group, weights=self.term_fraction * inverse, minlength=self.groups)

        entering = np.zeros(self.size)
        np.add.at(entering, self.starts, inverse_by_group)
        membership = np.empty(self.size)
        membership[self.order] = np.cumsum(entering)
        membership[self.event_rows] -= fraction_by_group[self.group_of_event]

        risk_weight = scaled * membership
        grad = risk_weight - self.events
        return EfronEvaluation(loss=loss, grad_log_s=grad, risk_weight=risk_weight, scale=scaled)

    def hessian(self, features: np.ndarray, log_s) -> np.ndarray:
        """Hessian of the loss with respect to theta when log_s = features @ theta."""
        features = np.asarray(features, dtype=np.float64)
        evaluation = self.evaluate(log_s)
        scaled = evaluation.scale
        denominators, _ = self._denominators(scaled)

        weighted = scaled[:, None] * features
        suffix = np.cumsum(weighted[self.order][::-1], axis=0)[::-1]
        risk_x = suffix[self.starts]
        tied_x = np.zeros((self.groups, features.shape[1]))
        np.add.at(tied_x, self.group_of_event, weighted[self.event_rows])
        numerators = risk_x[self.term_group] - self.term_fraction[:, None] * tied_x[self.term_group]
        means = numerators / denominators[:, None]

        first = features.T @ (evaluation.risk_weight[:, None] * features)
        return first - means.T @ means
