import argparse
import asyncio
import logging
import sys
from pathlib import Path

from survival_ranker.application.experiment_controller import ExperimentController
from survival_ranker.domain.exceptions.configuration_exception import ConfigurationException
from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException
from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException
from survival_ranker.domain.models.experiment_config import VimpConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="survival-ranker", description="Survival models ranked by C-index and AUROC.")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    prep = commands.add_parser("prep", help="load, split and encode a dataset")
    prep.add_argument("--spec", type=Path, required=True, help="dataset spec TOML")
    prep.add_argument("--out", type=Path, required=True)
    prep.add_argument("--seed", type=int, default=0, help="split seed")

    run = commands.add_parser("run", help="fit or train a model and evaluate it")
    run.add_argument("--config", type=Path, required=True, help="experiment TOML")
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--splits", type=int, help="number of split seeds (seed, seed+1, ...)")

    search = commands.add_parser("search", help="random hyperparameter search")
    search.add_argument("--config", type=Path, required=True, help="search TOML")
    search.add_argument("--out", type=Path, required=True)
    search.add_argument("--seed", type=int, help="master seed of the trial sequence")
    search.add_argument("--workers", type=int)

    curves = commands.add_parser("curves", help="Kaplan-Meier, AUROC, median and strata curves of a run")
    curves.add_argument("--model", type=Path, required=True, help="output directory of a run")
    curves.add_argument("--out", type=Path, required=True)
    curves.add_argument("--config", type=Path, help="experiment TOML holding [[strata]] tables")

    vimp = commands.add_parser("vimp", help="perturbation variable importance of a run")
    vimp.add_argument("--model", type=Path, required=True, help="output directory of a run")
    vimp.add_argument("--out", type=Path, required=True)
    vimp.add_argument("--config", type=Path, help="experiment TOML holding a [vimp] table")
    vimp.add_argument("--seed", type=int)
    vimp.add_argument("--workers", type=int)
    return parser


def default_controller() -> ExperimentController:
    from survival_ranker.domain.services._experiment_service import ExperimentService
    from survival_ranker.infrastructure.reporting._svg_plotter import SvgCurvePlotter
    from survival_ranker.infrastructure.repositories._csv_dataset_repository import CsvDatasetRepository

    service = ExperimentService(repository=CsvDatasetRepository(), plotter=SvgCurvePlotter())
    return ExperimentController(experiment_service=service)


def default_loader():
    from survival_ranker.infrastructure.config._toml_config_loader import TomlConfigLoader

    return TomlConfigLoader()


async def dispatch(args: argparse.Namespace, controller: ExperimentController, loader) -> None:
    if args.command == "prep":
        spec = loader.load_dataset_spec(args.spec)
        manifest = await controller.prep(spec, args.spec, args.out, seed=args.seed)
        print(
            f"{spec.name}: {manifest.fingerprint.rows} rows, {manifest.fingerprint.censored} censored "
            f"({manifest.fingerprint.censored_percent:.1f}%), {len(manifest.feature_names)} features"
        )
    elif args.command == "run":
        config = loader.load_experiment_config(args.config, {"seed": args.seed, "splits": args.splits})
        spec = loader.load_dataset_spec(Path(config.spec))
        report = await controller.run(config, spec, args.out)
        for split in report.splits:
            print(f"seed {split.seed}: test C-index {split.test_c_index}")
        if report.sd_c_index is not None:
            print(f"mean {report.mean_c_index:.4f} sd {report.sd_c_index:.4f}")
    elif args.command == "search":
        space = loader.load_search_space(args.config, {"seed": args.seed, "workers": args.workers})
        spec = loader.load_dataset_spec(Path(space.experiment.spec))
        _, records = await controller.search(space, spec, args.out)
        best = max(
            (r for r in records if r.status == "ok"),
            key=lambda r: (r.validation_c_index, -r.trial),
        )
        print(f"best trial {best.trial}: validation C-index {best.validation_c_index:.4f}")
    elif args.command == "curves":
        strata = loader.load_experiment_config(args.config).strata if args.config else []
        written = await controller.curves(args.model, args.out, strata)
        for path in written:
            print(path)
    elif args.command == "vimp":
        config = loader.load_experiment_config(args.config).vimp if args.config else VimpConfig()
        updates = {k: v for k, v in {"seed": args.seed, "workers": args.workers}.items() if v is not None}
        config = VimpConfig.model_validate({**config.model_dump(), **updates})
        report = await controller.vimp(args.model, args.out, config)
        for entry in report.entries:
            print(f"{entry.feature}\t{entry.vimp:+.6f}")


def main(argv: list[str] | None = None, controller: ExperimentController | None = None, loader=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"survival-ranker: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(message)s")
    try:
        asyncio.run(dispatch(args, controller or default_controller(), loader or default_loader()))
    except ConfigurationException as e:
        print(f"survival-ranker: configuration error: {e.message}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailureException as e:
        print(f"survival-ranker: numeric failure: {e.message}", file=sys.stderr)
        return EXIT_NUMERIC
    except SurvivalRankerException as e:
        print(f"survival-ranker: data error: {e.message}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        # pydantic validation of command-line overrides
        print(f"survival-ranker: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
