import sys

from survival_ranker.application.experiment_controller import ExperimentController
from survival_ranker.application.survival_cli import main
from survival_ranker.domain.services._experiment_service import ExperimentService
from survival_ranker.infrastructure.config._toml_config_loader import TomlConfigLoader
from survival_ranker.infrastructure.reporting._svg_plotter import SvgCurvePlotter
from survival_ranker.infrastructure.repositories._csv_dataset_repository import CsvDatasetRepository

repo = CsvDatasetRepository()
service = ExperimentService(repository=repo, plotter=SvgCurvePlotter())
controller = ExperimentController(experiment_service=service)

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:], controller=controller, loader=TomlConfigLoader()))
