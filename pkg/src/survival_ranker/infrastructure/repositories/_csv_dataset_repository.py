import logging
from pathlib import Path
from typing import TypeVar

import numpy as np
import pandas as pd
import toml
from pydantic import BaseModel, ValidationError

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.parse_exception import ParseException
from survival_ranker.domain.exceptions.schema_exception import SchemaException
from survival_ranker.domain.interfaces.abstract_dataset_repository import AbstractDatasetRepository
from survival_ranker.domain.models.dataset_spec import DatasetSpec, FeatureKind, PreparedManifest, RawTable
from survival_ranker.domain.models.survival_dataset import SurvivalDataset

if not __name__.startswith("survival_ranker"):
    raise ImportError("_csv_dataset_repository is internal and cannot be imported directly.")

ModelT = TypeVar("ModelT", bound=BaseModel)

ENCODED_FILE = "encoded.csv"
MANIFEST_FILE = "manifest.json"
FLOAT_FORMAT = "%.17g"


class CsvDatasetRepository(AbstractDatasetRepository):
    """
    Repository class for CSV survival tables and JSON artifacts.
    """

    def load_csv(self, spec: DatasetSpec) -> RawTable:
        path = Path(spec.path)
        if not path.is_file():
            raise InvalidInputException(f"Dataset file not found: {path}")

        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[], encoding="utf-8")
        except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
            logging.error(f"Error reading {path}: {e}")
            raise ParseException(f"Cannot read {path}: {type(e).__name__}: {e}") from e

        missing_columns = [c for c in spec.declared_columns if c not in frame.columns]
        if missing_columns:
            raise SchemaException(f"{path}: declared columns missing from header: {missing_columns}")

        # file line numbers: header is line 1
        frame.index = frame.index + 2
        for column, token in spec.row_filter.items():
            frame = frame[frame[column].str.strip() == token]
        frame = frame[spec.declared_columns].apply(lambda s: s.str.strip())
        missing = frame == spec.missing_token

        times = self._numeric(frame, missing, spec.time_column, allow_missing=False)
        if spec.start_column:
            times = times - self._numeric(frame, missing, spec.start_column, allow_missing=False)
        negative = np.flatnonzero(times < 0)
        if negative.size:
            raise ParseException("negative observed time", row=int(frame.index[negative[0]]), column=spec.time_column)

        if missing[spec.event_column].any():
            row = int(frame.index[np.flatnonzero(missing[spec.event_column].to_numpy())[0]])
            raise ParseException("missing event indicator", row=row, column=spec.event_column)
        events = frame[spec.event_column].isin(spec.event_values).to_numpy()

        features: dict[str, pd.Series] = {}
        kinds: dict[str, FeatureKind] = {}
        for column in spec.feature_columns:
            kinds[column.name] = column.kind
            if column.kind == FeatureKind.CONTINUOUS:
                values = self._numeric(frame, missing, column.name, allow_missing=True)
                features[column.name] = pd.Series(values, dtype=np.float64)
            else:
                cells = frame[column.name].to_numpy(dtype=object).copy()
                cells[missing[column.name].to_numpy()] = None
                features[column.name] = pd.Series(cells, dtype=object)

        table = pd.DataFrame(features)
        logging.info(f"Loaded {len(table)} rows from {path} ({int((~events).sum())} censored)")
        return RawTable(frame=table, kinds=kinds, times=times, events=events)

    def _numeric(self, frame: pd.DataFrame, missing: pd.DataFrame, column: str, allow_missing: bool) -> np.ndarray:
        raw = frame[column]
        absent = missing[column].to_numpy()
        if absent.any() and not allow_missing:
            raise ParseException("missing value", row=int(frame.index[np.flatnonzero(absent)[0]]), column=column)
        parsed = pd.to_numeric(raw.where(~missing[column]), errors="coerce").to_numpy(dtype=np.float64)
        bad = np.isnan(parsed) & ~absent
        if bad.any():
            k = np.flatnonzero(bad)[0]
            raise ParseException(f"unparseable numeric cell {raw.iloc[k]!r}", row=int(frame.index[k]), column=column)
        return parsed

    def save_prepared(self, directory: Path, dataset: SurvivalDataset, manifest: PreparedManifest) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        labels = np.full(len(dataset), "", dtype=object)
        for name in ("train", "validation", "test"):
            labels[manifest.split.part(name)] = name

        frame = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
        frame["time"] = dataset.times
        frame["event"] = dataset.events.astype(int)
        frame["split"] = labels
        frame.to_csv(directory / ENCODED_FILE, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self.save_model(directory / MANIFEST_FILE, manifest)
        logging.info(f"Prepared dataset written to {directory}")

    def load_prepared(self, directory: Path) -> tuple[SurvivalDataset, PreparedManifest]:
        directory = Path(directory)
        manifest = self.load_model(directory / MANIFEST_FILE, PreparedManifest)
        encoded = directory / ENCODED_FILE
        if not encoded.is_file():
            raise InvalidInputException(f"Prepared dataset not found: {encoded}; run prep first")
        # exact inverse of the %.17g written by save_prepared
        frame = pd.read_csv(encoded, keep_default_na=False, float_precision="round_trip")
        missing_columns = [c for c in manifest.feature_names + ["time", "event"] if c not in frame.columns]
        if missing_columns:
            raise SchemaException(f"{encoded}: columns missing: {missing_columns}")

        dataset = SurvivalDataset.from_arrays(
            frame[manifest.feature_names].to_numpy(dtype=np.float64),
            frame["time"].to_numpy(dtype=np.float64),
            frame["event"].to_numpy(dtype=np.int64) == 1,
            feature_names=manifest.feature_names,
            unit_length=manifest.unit_length,
            horizon_T=manifest.horizon_T,
        )
        return dataset, manifest

    def save_model(self, path: Path, document: BaseModel) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")

    def load_model(self, path: Path, model_type: type[ModelT]) -> ModelT:
        path = Path(path)
        if not path.is_file():
            raise InvalidInputException(f"Artifact not found: {path}")
        try:
            return model_type.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as e:
            logging.error(f"Invalid artifact {path}: {e}")
            raise SchemaException(f"Invalid artifact {path}: {e}") from e

    def save_table(self, path: Path, frame: pd.DataFrame) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    def save_text(self, path: Path, text: str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")

    def save_config(self, path: Path, document: BaseModel) -> None:
        self.save_text(path, toml.dumps(document.model_dump(mode="json", exclude_none=True)))
