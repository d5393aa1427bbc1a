import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from survival_ranker.domain.models.experiment_config import ExperimentConfig, ModelKind
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._experiment_service import ExperimentService
from survival_ranker.domain.services._preprocessing_service import stratified_split
from survival_ranker.infrastructure.config._toml_config_loader import DATA_DIR_ENV, TomlConfigLoader
from survival_ranker.infrastructure.reporting._svg_plotter import SvgCurvePlotter
from survival_ranker.infrastructure.repositories._csv_dataset_repository import CsvDatasetRepository

SPEC_DIR = Path(__file__).resolve().parent.parent / "dataset_specs"
DATA_DIR = os.environ.get(DATA_DIR_ENV)

# published Cox C-index and the tolerance of the five-seed mean
COX_REFERENCE = {"flchain": (0.7949, 0.02), "mgus2_tgt2": (0.6824, 0.04), "nwtco": (0.7208, 0.03)}


@unittest.skipUnless(DATA_DIR, f"{DATA_DIR_ENV} is not set")
class TestBenchmarkReproduction(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)
        self.loader = TomlConfigLoader()
        self.service = ExperimentService(repository=CsvDatasetRepository(), plotter=SvgCurvePlotter())

    def tearDown(self):
        self.directory.cleanup()

    def _spec(self, name: str):
        spec = self.loader.load_dataset_spec(SPEC_DIR / f"{name}.toml")
        if not Path(spec.path).is_file():
            self.skipTest(f"{spec.path} not downloaded")
        return spec

    def test_fingerprints_match(self):
        for path in sorted(SPEC_DIR.glob("*.toml")):
            with self.subTest(dataset=path.stem):
                spec = self._spec(path.stem)
                manifest = self.service.prep(spec, path, self.root / path.stem)
                self.assertEqual(manifest.fingerprint.rows, spec.expected.rows)

    def test_cox_c_index(self):
        for name, (reference, tolerance) in COX_REFERENCE.items():
            with self.subTest(dataset=name):
                spec = self._spec(name)
                config = ExperimentConfig(name=f"{name}-cox", spec=str(SPEC_DIR / f"{name}.toml"), model=ModelKind.COX, splits=5)
                report = self.service.run(config, spec, self.root / name)
                self.assertAlmostEqual(report.mean_c_index, reference, delta=tolerance)

    def test_flchain_split_censoring(self):
        spec = self._spec("flchain")
        table = self.service.repository.load_csv(spec)
        outcomes = SurvivalDataset.from_arrays(np.zeros((len(table), 0)), table.times, table.events)
        censored = ~outcomes.events
        for seed in range(100):
            split = stratified_split(outcomes, seed=seed)
            for name in ("train", "validation", "test"):
                rows = split.part(name)
                self.assertLessEqual(abs(100.0 * censored[rows].mean() - 72.5), 1.0, (seed, name))


if __name__ == '__main__':
    unittest.main()
