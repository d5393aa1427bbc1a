from abc import ABC, abstractmethod
from pathlib import Path
from typing import TypeVar

import pandas as pd
from pydantic import BaseModel

from survival_ranker.domain.models.dataset_spec import DatasetSpec, PreparedManifest, RawTable
from survival_ranker.domain.models.survival_dataset import SurvivalDataset

ModelT = TypeVar("ModelT", bound=BaseModel)


class AbstractDatasetRepository(ABC):
    """
    Abstract base class for dataset and artifact storage.
    This class defines the interface for reading raw survival tables and
    persisting prepared datasets, models and reports.
    """
    @abstractmethod
    def load_csv(self, spec: DatasetSpec) -> RawTable:
        """
        Read the CSV a spec points at.

        :param spec: The dataset spec (path already resolved).
        :return: Typed-or-missing cells of the declared columns.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def save_prepared(self, directory: Path, dataset: SurvivalDataset, manifest: PreparedManifest) -> None:
        """
        Persist an encoded dataset as CSV plus its sidecar manifest.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def load_prepared(self, directory: Path) -> tuple[SurvivalDataset, PreparedManifest]:
        """
        Load an encoded dataset written by `save_prepared`.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def save_model(self, path: Path, document: BaseModel) -> None:
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def load_model(self, path: Path, model_type: type[ModelT]) -> ModelT:
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def save_table(self, path: Path, frame: pd.DataFrame) -> None:
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def save_text(self, path: Path, text: str) -> None:
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def save_config(self, path: Path, document: BaseModel) -> None:
        """
        Write a configuration model in the same format the config loader reads.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")
