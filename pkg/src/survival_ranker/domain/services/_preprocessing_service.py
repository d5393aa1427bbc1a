# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_preprocessing_service is internal and cannot be imported directly.")

import logging
from typing import Any

import numpy as np
import pandas as pd
from sklearn.impute import SimpleImputer
from sklearn.preprocessing import MinMaxScaler, OneHotEncoder

from survival_ranker.domain.exceptions.dataset_fingerprint_exception import DatasetFingerprintException
from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.models.dataset_spec import (
    DatasetFingerprint,
    DatasetSpec,
    FeatureKind,
    RawTable,
    SplitIndices,
)
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._survival_estimation import discretize_times

DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)
SPLIT_NAMES = ("train", "validation", "test")


def drop_sparse_features(table: RawTable, threshold: float = 0.20) -> RawTable:
    """
    Remove feature columns whose missing fraction is strictly above `threshold`.
    The removed names are appended to `dropped_features`.
    """
    if not 0 < threshold <= 1:
        raise InvalidInputException(f"threshold must be in (0, 1], got {threshold}")
    if len(table) == 0:
        return table

    missing = table.frame.isna().mean(axis=0)
    dropped = [name for name in table.feature_names if missing[name] > threshold]
    for name in dropped:
        logging.info(f"Dropping feature {name!r}: {missing[name]:.1%} missing exceeds {threshold:.0%}")

    kept = [name for name in table.feature_names if name not in dropped]
    return RawTable(
        frame=table.frame[kept].copy(),
        kinds={name: table.kinds[name] for name in kept},
        times=table.times,
        events=table.events,
        dropped_features=table.dropped_features + tuple(dropped),
    )


def _columns_of(table: RawTable, kind: FeatureKind) -> list[str]:
    return [name for name in table.feature_names if table.kinds[name] == kind]


def _training_rows(table: RawTable, rows) -> np.ndarray:
    if rows is None:
        return np.arange(len(table))
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise InvalidInputException("Cannot fit preprocessing statistics on zero training rows")
    return rows


def _categorical_values(frame: pd.DataFrame) -> np.ndarray:
    values = frame.to_numpy(dtype=object)
    values[pd.isna(values)] = np.nan
    return values


class MissingValueImputer:
    """Median imputation for continuous columns, most common level for categorical ones."""

    def __init__(self) -> None:
        self._continuous: list[str] = []
        self._categorical: list[str] = []
        self._median = SimpleImputer(strategy="median")
        self._mode = SimpleImputer(strategy="most_frequent", missing_values=np.nan)

    def fit(self, table: RawTable, rows=None) -> "MissingValueImputer":
        rows = _training_rows(table, rows)
        train = table.frame.iloc[rows]
        empty = [name for name in table.feature_names if train[name].isna().all()]
        if empty:
            raise InvalidInputException(f"Columns without any observed training value: {empty}")

        self._continuous = _columns_of(table, FeatureKind.CONTINUOUS)
        self._categorical = _columns_of(table, FeatureKind.CATEGORICAL)
        if self._continuous:
            self._median.fit(train[self._continuous].to_numpy(dtype=np.float64))
        if self._categorical:
            self._mode.fit(_categorical_values(train[self._categorical]))
        return self

    def transform(self, table: RawTable) -> RawTable:
        frame = table.frame.copy()
        if self._continuous:
            frame[self._continuous] = self._median.transform(frame[self._continuous].to_numpy(dtype=np.float64))
        if self._categorical:
            filled = self._mode.transform(_categorical_values(frame[self._categorical]))
            frame[self._categorical] = pd.DataFrame(filled, columns=self._categorical, index=frame.index)
        return RawTable(
            frame=frame,
            kinds=dict(table.kinds),
            times=table.times,
            events=table.events,
            dropped_features=table.dropped_features,
        )

    def statistics(self) -> dict[str, Any]:
        stats: dict[str, Any] = {}
        if self._continuous:
            stats.update({n: float(v) for n, v in zip(self._continuous, self._median.statistics_)})
        if self._categorical:
            stats.update({n: str(v) for n, v in zip(self._categorical, self._mode.statistics_)})
        return stats


def impute(table: RawTable, train_rows=None) -> RawTable:
    return MissingValueImputer().fit(table, train_rows).transform(table)


class FeatureEncoder:
    """
    One indicator per training category for categorical columns and
    (x - min) / (max - min) unit scaling for continuous ones, clipped to [0, 1].
    Unseen categories encode as an all-zeros block; constant columns encode as zeros.
    """

    def __init__(self) -> None:
        self._continuous: list[str] = []
        self._categorical: list[str] = []
        self._order: list[str] = []
        self._scaler = MinMaxScaler(clip=True)
        self._one_hot = OneHotEncoder(handle_unknown="ignore", sparse_output=False, dtype=np.float64)
        self.constant_columns: list[str] = []
        self.feature_names: list[str] = []

    def fit(self, table: RawTable, rows=None) -> "FeatureEncoder":
        rows = _training_rows(table, rows)
        train = table.frame.iloc[rows]
        if train.isna().any().any():
            raise InvalidInputException("encode requires a table without missing cells; impute first")

        self._order = table.feature_names
        self._continuous = _columns_of(table, FeatureKind.CONTINUOUS)
        self._categorical = _columns_of(table, FeatureKind.CATEGORICAL)
        if self._continuous:
            values = train[self._continuous].to_numpy(dtype=np.float64)
            self._scaler.fit(values)
            span = self._scaler.data_max_ - self._scaler.data_min_
            self.constant_columns = [n for n, s in zip(self._continuous, span) if s == 0]
            for name in self.constant_columns:
                logging.warning(f"Constant continuous column {name!r} encoded as all zeros")
        if self._categorical:
            self._one_hot.fit(train[self._categorical].astype(str).to_numpy(dtype=object))

        names: list[str] = []
        for name in self._order:
            if name in self._continuous:
                names.append(name)
            else:
                position = self._categorical.index(name)
                names.extend(f"{name}={level}" for level in self._one_hot.categories_[position])
        self.feature_names = names
        return self

    def transform(self, table: RawTable) -> np.ndarray:
        if table.frame.isna().any().any():
            raise InvalidInputException("encode requires a table without missing cells; impute first")
        blocks: dict[str, np.ndarray] = {}
        if self._continuous:
            scaled = self._scaler.transform(table.frame[self._continuous].to_numpy(dtype=np.float64))
            for k, name in enumerate(self._continuous):
                column = scaled[:, k:k + 1]
                blocks[name] = np.zeros_like(column) if name in self.constant_columns else column
        if self._categorical:
            indicators = self._one_hot.transform(table.frame[self._categorical].astype(str).to_numpy(dtype=object))
            offset = 0
            for position, name in enumerate(self._categorical):
                width = len(self._one_hot.categories_[position])
                blocks[name] = indicators[:, offset:offset + width]
                offset += width
        if not blocks:
            return np.zeros((len(table), 0))
        return np.hstack([blocks[name] for name in self._order])

    def statistics(self) -> dict[str, Any]:
        stats: dict[str, Any] = {}
        for k, name in enumerate(self._continuous):
            stats[name] = {"min": float(self._scaler.data_min_[k]), "max": float(self._scaler.data_max_[k])}
        for position, name in enumerate(self._categorical):
            stats[name] = {"categories": [str(c) for c in self._one_hot.categories_[position]]}
        return stats


def encode(table: RawTable, train_rows=None) -> tuple[np.ndarray, list[str]]:
    encoder = FeatureEncoder().fit(table, train_rows)
    return encoder.transform(table), encoder.feature_names


def indicator_features(spec: DatasetSpec, feature_names: list[str]) -> frozenset[str]:
    """Encoded names that are one-hot indicators of a categorical column ("column=level")."""
    prefixes = tuple(f"{c.name}=" for c in spec.feature_columns if c.kind == FeatureKind.CATEGORICAL)
    return frozenset(name for name in feature_names if prefixes and name.startswith(prefixes))


class FeaturePipeline:
    """Imputation followed by encoding, both fitted on training rows only."""

    def __init__(self) -> None:
        self.imputer = MissingValueImputer()
        self.encoder = FeatureEncoder()

    def fit(self, table: RawTable, rows=None) -> "FeaturePipeline":
        self.imputer.fit(table, rows)
        self.encoder.fit(self.imputer.transform(table), rows)
        return self

    def transform(self, table: RawTable) -> np.ndarray:
        return self.encoder.transform(self.imputer.transform(table))

    @property
    def feature_names(self) -> list[str]:
        return self.encoder.feature_names

    def statistics(self) -> dict[str, Any]:
        return {
            "imputation": self.imputer.statistics(),
            "scaling": self.encoder.statistics(),
            "constant_columns": list(self.encoder.constant_columns),
        }


def _largest_remainder(total: int, fractions: tuple[float, ...]) -> list[int]:
    raw = [total * f for f in fractions]
    quotas = [int(np.floor(r)) for r in raw]
    remainders = sorted(range(len(raw)), key=lambda k: (-(raw[k] - quotas[k]), k))
    for k in remainders[: total - sum(quotas)]:
        quotas[k] += 1
    return quotas


def _apportion(total: int, quotas: list[int]) -> np.ndarray:
    """Spread `quotas` along a sequence so that every prefix stays within one record of proportional."""
    assigned = [0] * len(quotas)
    sequence = np.empty(total, dtype=np.int64)
    for position in range(total):
        deficits = [quotas[s] * (position + 1) - assigned[s] * total for s in range(len(quotas))]
        chosen = max(range(len(quotas)), key=lambda s: (deficits[s], -s))
        sequence[position] = chosen
        assigned[chosen] += 1
    return sequence


def _merge_small_cells(
    cells: list[np.ndarray], cell_bins: list[int], minimum: int, label: str
) -> tuple[list[np.ndarray], list[str]]:
    merged: list[np.ndarray] = []
    notes: list[str] = []
    pending: np.ndarray | None = None
    pending_bins: list[int] = []
    for time_bin, cell in zip(cell_bins, cells):
        if pending is not None:
            notes.append(f"{label} bins {pending_bins} merged into bin {time_bin}")
            cell = np.concatenate([pending, cell])
            pending, pending_bins = None, []
        if cell.size < minimum:
            pending = cell
            pending_bins.append(int(time_bin))
            continue
        merged.append(cell)
    if pending is not None:
        if merged:
            notes.append(f"{label} bins {pending_bins} merged into the previous bin")
            merged[-1] = np.concatenate([merged[-1], pending])
        else:
            merged.append(pending)
    return merged, notes


def stratified_split(
    dataset: SurvivalDataset,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> SplitIndices:
    """
    Train / validation / test split stratified on (event indicator × time bin).

    Each event group gets largest-remainder quotas; records are shuffled inside
    their cell (seeded) and dealt along the bin order so that every cell is
    allocated within a record of proportional. Cells too small to give every
    split a record are merged with the next time bin.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidInputException(f"fractions must be three positive numbers summing to 1, got {fractions}")
    if len(dataset) == 0:
        raise InvalidInputException("Cannot split an empty dataset")

    rng = np.random.default_rng(seed)
    bins = discretize_times(dataset.times, dataset.unit_length)
    parts: list[list[int]] = [[], [], []]
    notes: list[str] = []

    for flag, label in ((True, "event"), (False, "censored")):
        members = np.flatnonzero(dataset.events == flag)
        if members.size == 0:
            continue
        cell_bins = [int(b) for b in np.unique(bins[members])]
        cells = [members[bins[members] == b] for b in cell_bins]
        cells, merge_notes = _merge_small_cells(cells, cell_bins, len(fractions), label)
        notes.extend(merge_notes)

        ordered = np.concatenate([rng.permutation(cell) for cell in cells])
        sequence = _apportion(ordered.size, _largest_remainder(ordered.size, fractions))
        for s in range(len(fractions)):
            parts[s].extend(int(i) for i in ordered[sequence == s])

    for note in notes:
        logging.info(f"Stratified split: {note}")
    return SplitIndices(
        train=sorted(parts[0]),
        validation=sorted(parts[1]),
        test=sorted(parts[2]),
        seed=seed,
        merged_cells=notes,
    )


def fingerprint(times, events) -> DatasetFingerprint:
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events).astype(bool)
    censored = int(np.count_nonzero(~events))
    rows = int(times.shape[0])
    return DatasetFingerprint(
        rows=rows,
        censored=censored,
        censored_percent=100.0 * censored / rows if rows else 0.0,
        unique_times=int(np.unique(times).size),
    )


def verify_fingerprint(spec: DatasetSpec, observed: DatasetFingerprint, tolerance_points: float = 0.5) -> None:
    """Hard failure on row-count or censored-percentage drift against the published figures."""
    expected = spec.expected
    if expected is None:
        return
    expected_percent = 100.0 * expected.censored / expected.rows
    if observed.rows != expected.rows:
        raise DatasetFingerprintException(
            f"{spec.name}: expected {expected.rows} rows, ingested {observed.rows}"
        )
    if abs(observed.censored_percent - expected_percent) > tolerance_points:
        raise DatasetFingerprintException(
            f"{spec.name}: censored {observed.censored_percent:.1f}% differs from published {expected_percent:.1f}%"
        )
    if expected.unique_times is not None and observed.unique_times != expected.unique_times:
        logging.warning(
            f"{spec.name}: {observed.unique_times} unique times, published {expected.unique_times}"
        )
