import logging
import os
from pathlib import Path
from typing import Any, TypeVar

import toml
from pydantic import BaseModel, ValidationError

from survival_ranker.domain.exceptions.configuration_exception import ConfigurationException
from survival_ranker.domain.models.dataset_spec import DatasetSpec
from survival_ranker.domain.models.experiment_config import ExperimentConfig, SearchSpace

if not __name__.startswith("survival_ranker"):
    raise ImportError("_toml_config_loader is internal and cannot be imported directly.")

DATA_DIR_ENV = "SURVIVAL_RANKER_DATA_DIR"

ModelT = TypeVar("ModelT", bound=BaseModel)


class TomlConfigLoader:
    """
    Reads TOML configuration files into validated models.
    Relative paths inside a file resolve against that file's directory; dataset CSVs
    resolve against $SURVIVAL_RANKER_DATA_DIR when it is set.
    """

    def __init__(self, environ: dict[str, str] | None = None) -> None:
        self.environ = os.environ if environ is None else environ

    def _read(self, path: Path) -> dict[str, Any]:
        try:
            return toml.load(path)
        except FileNotFoundError as e:
            raise ConfigurationException(f"Config file not found: {path}") from e
        except (OSError, toml.TomlDecodeError) as e:
            logging.error(f"Error reading {path}: {e}")
            raise ConfigurationException(f"Cannot parse {path}: {e}") from e

    def _validate(self, path: Path, model_type: type[ModelT], document: dict[str, Any]) -> ModelT:
        try:
            return model_type.model_validate(document)
        except ValidationError as e:
            raise ConfigurationException(f"Invalid configuration in {path}: {e}") from e

    @staticmethod
    def _resolve(base: Path, value: str) -> str:
        candidate = Path(value).expanduser()
        return str(candidate if candidate.is_absolute() else (base / candidate).resolve())

    def load_dataset_spec(self, path: Path) -> DatasetSpec:
        path = Path(path)
        document = self._read(path)
        if "path" in document:
            data_dir = self.environ.get(DATA_DIR_ENV)
            base = Path(data_dir) if data_dir else path.parent
            document["path"] = self._resolve(base, document["path"])
        return self._validate(path, DatasetSpec, document)

    def _experiment_document(self, path: Path, document: dict[str, Any]) -> dict[str, Any]:
        if "spec" in document:
            document["spec"] = self._resolve(path.parent, document["spec"])
        return document

    def load_experiment_config(self, path: Path, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
        """
        :param overrides: top-level values replacing those of the file (command-line flags).
        """
        path = Path(path)
        document = self._experiment_document(path, self._read(path))
        document.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return self._validate(path, ExperimentConfig, document)

    def load_search_space(self, path: Path, overrides: dict[str, Any] | None = None) -> SearchSpace:
        """
        A search file holds the random-search ranges at top level and the base
        experiment under [experiment].

        :param overrides: top-level search values (seed, workers) replacing those of the file.
        """
        path = Path(path)
        document = self._read(path)
        document["experiment"] = self._experiment_document(path, dict(document.get("experiment", {})))
        document.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return self._validate(path, SearchSpace, document)
