import math
from dataclasses import dataclass, field

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject: encoded features, observed time (event or censoring) and event flag."""

    features: np.ndarray
    observed_time: float
    event: bool


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """
    Right-censored survival data held column-wise.

    `features` is (n, d), `times` and `events` are (n,). The derived fields
    (`unique_event_times`, `tie_groups`, `horizon_T`) are computed by `from_arrays`
    and should not be passed by hand.
    """

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: tuple[str, ...]
    unit_length: float
    horizon_T: int
    unique_event_times: np.ndarray
    tie_groups: dict[float, np.ndarray] = field(repr=False)

    @classmethod
    def from_arrays(
        cls,
        features: np.ndarray,
        times: np.ndarray,
        events: np.ndarray,
        feature_names: list[str] | tuple[str, ...] | None = None,
        unit_length: float = 1.0,
        horizon_T: int | None = None,
    ) -> "SurvivalDataset":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        times = np.asarray(times, dtype=np.float64).reshape(-1)
        events = np.asarray(events).astype(bool).reshape(-1)

        if features.shape[0] != times.shape[0] or times.shape[0] != events.shape[0]:
            raise InvalidInputException(
                f"Mismatched lengths: features {features.shape[0]}, times {times.shape[0]}, events {events.shape[0]}"
            )
        if unit_length <= 0:
            raise InvalidInputException(f"unit_length must be positive, got {unit_length}")
        if times.size and (not np.all(np.isfinite(times)) or np.any(times < 0)):
            raise InvalidInputException("Observed times must be finite and non-negative")

        if feature_names is None:
            feature_names = [f"x{k}" for k in range(features.shape[1])]
        if len(feature_names) != features.shape[1]:
            raise InvalidInputException(
                f"{len(feature_names)} feature names for {features.shape[1]} feature columns"
            )

        max_bin = int(np.floor(times.max() / unit_length)) if times.size else -1
        required = max_bin + 1
        if horizon_T is None:
            horizon_T = required
        elif horizon_T < required:
            raise InvalidInputException(f"horizon_T={horizon_T} is below the required {required}")

        unique_event_times = np.unique(times[events])
        tie_groups = {float(t): np.flatnonzero(events & (times == t)) for t in unique_event_times}

        return cls(
            features=features,
            times=times,
            events=events,
            feature_names=tuple(feature_names),
            unit_length=float(unit_length),
            horizon_T=int(horizon_T),
            unique_event_times=unique_event_times,
            tie_groups=tie_groups,
        )

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def feature_count(self) -> int:
        return int(self.features.shape[1])

    @property
    def records(self) -> list[SurvivalRecord]:
        return [
            SurvivalRecord(features=self.features[i], observed_time=float(self.times[i]), event=bool(self.events[i]))
            for i in range(len(self))
        ]

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(~self.events)) if len(self) else math.nan

    def subset(self, indices) -> "SurvivalDataset":
        """Row subset that keeps the parent horizon so label matrices line up."""
        indices = np.asarray(indices, dtype=np.int64)
        return SurvivalDataset.from_arrays(
            self.features[indices],
            self.times[indices],
            self.events[indices],
            feature_names=self.feature_names,
            unit_length=self.unit_length,
            horizon_T=self.horizon_T,
        )

    def with_features(self, features: np.ndarray) -> "SurvivalDataset":
        return SurvivalDataset.from_arrays(
            features,
            self.times,
            self.events,
            feature_names=self.feature_names,
            unit_length=self.unit_length,
            horizon_T=self.horizon_T,
        )


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """records × horizon_T survival labels (1 = survived beyond threshold t) with observability mask."""

    labels: np.ndarray
    mask: np.ndarray

    @property
    def horizon_T(self) -> int:
        return int(self.labels.shape[1])

    def rows(self, indices) -> "LabelMatrix":
        return LabelMatrix(labels=self.labels[indices], mask=self.mask[indices])


@dataclass(frozen=True, eq=False)
class KMCurve:
    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def __len__(self) -> int:
        return int(self.times.shape[0])
