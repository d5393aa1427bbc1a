from abc import ABC, abstractmethod
from pathlib import Path

from survival_ranker.domain.models.dataset_spec import DatasetSpec, PreparedManifest
from survival_ranker.domain.models.experiment_config import (
    ExperimentConfig,
    SearchSpace,
    StrataConfig,
    TrialRecord,
    VimpConfig,
)
from survival_ranker.domain.models.reports import MetricReport, VimpReport


class AbstractExperimentService(ABC):
    """
    Abstract base class for experiment services.
    This class defines the interface for preparing datasets, fitting models,
    searching hyperparameters and interpreting fitted models.
    """
    @abstractmethod
    def prep(
        self,
        spec: DatasetSpec,
        spec_path: Path,
        out_dir: Path,
        seed: int = 0,
        fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
    ) -> PreparedManifest:
        """
        Load, clean, split and encode a dataset, then write it with its manifest.

        :param spec: The dataset spec, data path already resolved.
        :param spec_path: Where the spec was read from (recorded in the manifest).
        :param out_dir: Output directory.
        :return: The manifest that was written.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def run(self, config: ExperimentConfig, spec: DatasetSpec, out_dir: Path) -> MetricReport:
        """
        Fit or train the configured model on every requested split seed and evaluate it on test.

        :return: The deterministic metric report that was written.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def search(
        self,
        space: SearchSpace,
        spec: DatasetSpec,
        out_dir: Path,
    ) -> tuple[ExperimentConfig, list[TrialRecord]]:
        """
        Random hyperparameter search scored on validation C-index.

        :return: The best experiment config and the table of all trials.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def curves(self, run_dir: Path, out_dir: Path, strata: list[StrataConfig] | None = None) -> list[Path]:
        """
        Emit Kaplan-Meier, AUROC, median-survival and strata curves of a finished run.

        :return: Paths of the files written.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def vimp(self, run_dir: Path, out_dir: Path, config: VimpConfig) -> VimpReport:
        """
        Perturbation variable importance of the model of a finished run.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")
