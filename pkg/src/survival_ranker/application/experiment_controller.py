import asyncio
import logging
from pathlib import Path

from survival_ranker.domain.interfaces.abstract_experiment_service import AbstractExperimentService
from survival_ranker.domain.models.dataset_spec import DatasetSpec, PreparedManifest
from survival_ranker.domain.models.experiment_config import (
    ExperimentConfig,
    SearchSpace,
    StrataConfig,
    TrialRecord,
    VimpConfig,
)
from survival_ranker.domain.models.reports import MetricReport, VimpReport


class ExperimentController:
    def __init__(self, experiment_service: AbstractExperimentService) -> None:
        """
        Initialize the controller with a service (dependency injection).
        """
        self.experiment_service = experiment_service

    async def prep(
        self,
        spec: DatasetSpec,
        spec_path: Path,
        out_dir: Path,
        seed: int = 0,
        fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
    ) -> PreparedManifest:
        try:
            manifest = await asyncio.to_thread(self.experiment_service.prep, spec, spec_path, out_dir, seed, fractions)
            logging.info(f"Controller: Prepared dataset {spec.name}.")
            return manifest
        except Exception as e:
            logging.error(f"Controller: Error preparing dataset: {e}")
            raise

    async def run(self, config: ExperimentConfig, spec: DatasetSpec, out_dir: Path) -> MetricReport:
        try:
            report = await asyncio.to_thread(self.experiment_service.run, config, spec, out_dir)
            logging.info(f"Controller: Run {config.name} finished.")
            return report
        except Exception as e:
            logging.error(f"Controller: Error running experiment: {e}")
            raise

    async def search(
        self, space: SearchSpace, spec: DatasetSpec, out_dir: Path
    ) -> tuple[ExperimentConfig, list[TrialRecord]]:
        try:
            result = await asyncio.to_thread(self.experiment_service.search, space, spec, out_dir)
            logging.info(f"Controller: Search over {space.trials} trials finished.")
            return result
        except Exception as e:
            logging.error(f"Controller: Error in search: {e}")
            raise

    async def curves(self, run_dir: Path, out_dir: Path, strata: list[StrataConfig] | None = None) -> list[Path]:
        try:
            written = await asyncio.to_thread(self.experiment_service.curves, run_dir, out_dir, strata)
            logging.info(f"Controller: Curves written to {out_dir}.")
            return written
        except Exception as e:
            logging.error(f"Controller: Error writing curves: {e}")
            raise

    async def vimp(self, run_dir: Path, out_dir: Path, config: VimpConfig) -> VimpReport:
        try:
            report = await asyncio.to_thread(self.experiment_service.vimp, run_dir, out_dir, config)
            logging.info(f"Controller: VIMP computed for {len(report.entries)} features.")
            return report
        except Exception as e:
            logging.error(f"Controller: Error computing VIMP: {e}")
            raise
