# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_experiment_service is internal and cannot be imported directly.")

import logging
import re
import statistics
import time
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.schema_exception import SchemaException
from survival_ranker.domain.exceptions.training_aborted_exception import TrainingAbortedException
from survival_ranker.domain.exceptions.undefined_metric_exception import UndefinedMetricException
from survival_ranker.domain.interfaces.abstract_curve_plotter import AbstractCurvePlotter
from survival_ranker.domain.interfaces.abstract_dataset_repository import AbstractDatasetRepository
from survival_ranker.domain.interfaces.abstract_experiment_service import AbstractExperimentService
from survival_ranker.domain.interfaces.abstract_risk_predictor import AbstractRiskPredictor
from survival_ranker.domain.models.cox_model import CoxModelManifest
from survival_ranker.domain.models.dataset_spec import DatasetFingerprint, DatasetSpec, PreparedManifest, RawTable
from survival_ranker.domain.models.experiment_config import (
    ExperimentConfig,
    ModelKind,
    SearchSpace,
    StrataConfig,
    TrialRecord,
    VimpConfig,
)
from survival_ranker.domain.models.network import NetworkManifest, SelectionScore, TrainHistory
from survival_ranker.domain.models.reports import MetricReport, SplitResult, TimingReport, VimpReport
from survival_ranker.domain.models.survival_dataset import SurvivalDataset
from survival_ranker.domain.services._cox_service import fit_cox
from survival_ranker.domain.services._interpretation_service import median_survival_curve, strata_curves, vimp_report
from survival_ranker.domain.services._network import monotonicity_violation_rate
from survival_ranker.domain.services._preprocessing_service import (
    SPLIT_NAMES,
    FeaturePipeline,
    drop_sparse_features,
    fingerprint,
    indicator_features,
    stratified_split,
    verify_fingerprint,
)
from survival_ranker.domain.services._ranking_metrics import auroc_series, concordance_index
from survival_ranker.domain.services._risk_predictors import CoxRiskPredictor, NetworkRiskPredictor
from survival_ranker.domain.services._search_service import random_search
from survival_ranker.domain.services._survival_estimation import kaplan_meier, survival_labels
from survival_ranker.domain.services._training_service import train

PREPARED_DIR = "prepared"
MODEL_FILE = "model.json"
REPORT_FILE = "report.json"
TIMING_FILE = "timing.json"
HISTORY_FILE = "history.csv"
TRIALS_FILE = "trials.csv"
BEST_CONFIG_FILE = "best_config.toml"
VIMP_FILE = "vimp.csv"


class _ModelHeader(BaseModel):
    kind: str


def _file_stem(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def _threshold_frame(rows: list[list[float | None]], horizon_T: int) -> pd.DataFrame:
    return pd.DataFrame(np.array(rows, dtype=np.float64), columns=[str(t) for t in range(horizon_T)])


class ExperimentService(AbstractExperimentService):
    """
    Service class for survival experiments.
    This class binds preprocessing, model fitting, evaluation and interpretation
    to the dataset repository.
    """
    def __init__(self, repository: AbstractDatasetRepository, plotter: AbstractCurvePlotter | None = None) -> None:
        """
        Initialize the ExperimentService with a repository and an optional SVG plotter (dependency injection).
        """
        self.repository = repository
        self.plotter = plotter

    def _load_table(self, spec: DatasetSpec) -> tuple[RawTable, DatasetFingerprint]:
        table = self.repository.load_csv(spec)
        observed = fingerprint(table.times, table.events)
        verify_fingerprint(spec, observed)
        return drop_sparse_features(table, spec.missing_threshold), observed

    def _prepare(
        self,
        table: RawTable,
        observed: DatasetFingerprint,
        spec: DatasetSpec,
        spec_path: Path,
        seed: int,
        fractions: tuple[float, float, float],
    ) -> tuple[SurvivalDataset, PreparedManifest]:
        outcomes = SurvivalDataset.from_arrays(
            np.zeros((len(table), 0)), table.times, table.events, feature_names=[], unit_length=spec.time_unit_length
        )
        split = stratified_split(outcomes, fractions, seed)
        pipeline = FeaturePipeline().fit(table, split.train)
        dataset = SurvivalDataset.from_arrays(
            pipeline.transform(table),
            table.times,
            table.events,
            feature_names=pipeline.feature_names,
            unit_length=spec.time_unit_length,
        )
        manifest = PreparedManifest(
            spec=spec,
            spec_path=str(spec_path),
            feature_names=pipeline.feature_names,
            dropped_features=list(table.dropped_features),
            statistics=pipeline.statistics(),
            split=split,
            fractions=tuple(fractions),
            fingerprint=observed,
            unit_length=spec.time_unit_length,
            horizon_T=dataset.horizon_T,
        )
        return dataset, manifest

    def prep(
        self,
        spec: DatasetSpec,
        spec_path: Path,
        out_dir: Path,
        seed: int = 0,
        fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
    ) -> PreparedManifest:
        try:
            table, observed = self._load_table(spec)
            dataset, manifest = self._prepare(table, observed, spec, spec_path, seed, fractions)
            self.repository.save_prepared(Path(out_dir), dataset, manifest)
            logging.info(
                f"Service: prepared {spec.name}: {observed.rows} rows, {observed.censored_percent:.1f}% censored, "
                f"{len(manifest.feature_names)} encoded features, dropped {manifest.dropped_features}"
            )
            return manifest
        except Exception as e:
            logging.error(f"Service: Error preparing {spec.name}: {e}")
            raise

    def _survival_scores(self, predictor: AbstractRiskPredictor, dataset: SurvivalDataset) -> tuple[np.ndarray, bool]:
        """Per-threshold survival scores; models without a survival head rank by minus their risk."""
        if isinstance(predictor, NetworkRiskPredictor):
            return predictor.predict_survival(dataset.features), True
        risk = predictor.predict_risk(dataset.features)
        return np.repeat(-risk[:, None], dataset.horizon_T, axis=1), False

    def _run_split(
        self,
        config: ExperimentConfig,
        dataset: SurvivalDataset,
        manifest: PreparedManifest,
        artifacts: Path | None,
    ) -> SplitResult:
        seed = manifest.split.seed
        parts = {name: dataset.subset(manifest.split.part(name)) for name in SPLIT_NAMES}
        result = SplitResult(seed=seed)

        if config.model == ModelKind.COX:
            model = fit_cox(parts["train"], config.cox.tolerance, config.cox.max_iters, config.cox.l2)
            predictor: AbstractRiskPredictor = CoxRiskPredictor(model)
            document: BaseModel = model.to_manifest()
            result.converged = model.converged
            history = None
        else:
            train_config = config.effective_train_config(seed=seed)
            architecture = config.network.architecture(dataset.feature_count, dataset.horizon_T)
            try:
                state, history = train(parts["train"], parts["validation"], architecture, train_config)
            except TrainingAbortedException as e:
                if artifacts is not None and isinstance(e.history, TrainHistory):
                    self._save_history(artifacts, e.history)
                result.failure = e.message
                return result
            predictor = NetworkRiskPredictor(state, train_config.selection_score)
            document = state.to_manifest().model_copy(update={"selection_score": train_config.selection_score})
            result.chosen_epoch = history.chosen_epoch

        validation, test = parts["validation"], parts["test"]
        result.validation_c_index = self._c_index(validation, predictor.predict_risk(validation.features))
        result.test_c_index = self._c_index(test, predictor.predict_risk(test.features))
        scores, has_head = self._survival_scores(predictor, test)
        if has_head:
            result.test_c_index_s1 = self._c_index(
                test, NetworkRiskPredictor(predictor.state, SelectionScore.S1).predict_risk(test.features)
            )
            result.test_c_index_s2_mean = self._c_index(test, -scores.mean(axis=1))
            result.monotonicity_violation_rate = monotonicity_violation_rate(scores)
        labels = survival_labels(test)
        result.auroc = auroc_series(labels, scores, censored=True)
        result.auroc_uncensored = auroc_series(labels, scores, censored=False)

        if artifacts is not None:
            self.repository.save_prepared(artifacts / PREPARED_DIR, dataset, manifest)
            self.repository.save_model(artifacts / MODEL_FILE, document)
            if history is not None:
                self._save_history(artifacts, history)
            self._write_curves(test, predictor, artifacts, manifest, config.strata)
        return result

    def _c_index(self, dataset: SurvivalDataset, risk: np.ndarray) -> float | None:
        try:
            return concordance_index(dataset.times, dataset.events, risk)
        except UndefinedMetricException:
            logging.warning(f"Service: C-index undefined on a split of {len(dataset)} records")
            return None

    def _save_history(self, directory: Path, history: TrainHistory) -> None:
        frame = pd.DataFrame([record.model_dump() for record in history.epochs])
        self.repository.save_table(directory / HISTORY_FILE, frame)

    def run(self, config: ExperimentConfig, spec: DatasetSpec, out_dir: Path) -> MetricReport:
        try:
            out_dir = Path(out_dir)
            table, observed = self._load_table(spec)
            seeds = [config.seed + k for k in range(config.splits)]
            results: list[SplitResult] = []
            seconds: list[float] = []
            for index, seed in enumerate(seeds):
                started = time.perf_counter()
                dataset, manifest = self._prepare(table, observed, spec, Path(config.spec), seed, config.fractions)
                result = self._run_split(config, dataset, manifest, out_dir if index == 0 else None)
                seconds.append(time.perf_counter() - started)
                results.append(result)
                logging.info(f"Service: split seed {seed}: test C-index {result.test_c_index}")

            scores = [r.test_c_index for r in results if r.test_c_index is not None]
            report = MetricReport(
                name=config.name,
                dataset=spec.name,
                model=config.model.value,
                fingerprint=observed,
                seeds=seeds,
                hyperparameters=config.model_dump(mode="json", exclude={"spec", "vimp", "strata"}),
                splits=results,
                mean_c_index=statistics.fmean(scores) if scores else None,
                sd_c_index=statistics.stdev(scores) if len(scores) > 1 else None,
            )
            self.repository.save_model(out_dir / REPORT_FILE, report)
            self.repository.save_model(out_dir / TIMING_FILE, TimingReport(seconds_per_split=seconds, total_seconds=sum(seconds)))

            failures = [f"seed {r.seed}: {r.failure}" for r in results if r.failure]
            if failures:
                raise TrainingAbortedException("training aborted on " + "; ".join(failures))
            logging.info(f"Service: run {config.name} written to {out_dir}")
            return report
        except Exception as e:
            logging.error(f"Service: Error running {config.name}: {e}")
            raise

    def search(
        self,
        space: SearchSpace,
        spec: DatasetSpec,
        out_dir: Path,
    ) -> tuple[ExperimentConfig, list[TrialRecord]]:
        try:
            out_dir = Path(out_dir)
            base = space.experiment
            table, observed = self._load_table(spec)
            dataset, manifest = self._prepare(table, observed, spec, Path(base.spec), base.seed, base.fractions)
            best, records = random_search(
                space,
                dataset.subset(manifest.split.train),
                dataset.subset(manifest.split.validation),
            )
            self.repository.save_table(out_dir / TRIALS_FILE, pd.DataFrame([r.model_dump() for r in records]))
            self.repository.save_config(out_dir / BEST_CONFIG_FILE, best)
            return best, records
        except Exception as e:
            logging.error(f"Service: Error in random search: {e}")
            raise

    def _load_run(self, run_dir: Path) -> tuple[SurvivalDataset, PreparedManifest, AbstractRiskPredictor]:
        run_dir = Path(run_dir)
        dataset, manifest = self.repository.load_prepared(run_dir / PREPARED_DIR)
        header = self.repository.load_model(run_dir / MODEL_FILE, _ModelHeader)
        if header.kind == "cox":
            cox = self.repository.load_model(run_dir / MODEL_FILE, CoxModelManifest)
            if cox.feature_order != manifest.feature_names:
                raise SchemaException("model features do not match the prepared dataset")
            return dataset, manifest, CoxRiskPredictor(cox.to_model())
        if header.kind == "network":
            network = self.repository.load_model(run_dir / MODEL_FILE, NetworkManifest)
            if network.architecture.input_dim != dataset.feature_count:
                raise SchemaException("model input width does not match the prepared dataset")
            return dataset, manifest, NetworkRiskPredictor(network.to_state(), network.selection_score)
        raise SchemaException(f"unknown model kind {header.kind!r}")

    def _write_curves(
        self,
        dataset: SurvivalDataset,
        predictor: AbstractRiskPredictor,
        out_dir: Path,
        manifest: PreparedManifest,
        strata: list[StrataConfig] | None = None,
    ) -> list[Path]:
        written: list[Path] = []

        def table(name: str, frame: pd.DataFrame) -> None:
            self.repository.save_table(out_dir / name, frame)
            written.append(out_dir / name)

        def plot(name: str, x, series: dict, title: str, xlabel: str, ylabel: str, step: bool = False) -> None:
            if self.plotter is not None:
                self.plotter.plot_lines(out_dir / name, np.asarray(x, dtype=np.float64), series, title, xlabel, ylabel, step)
                written.append(out_dir / name)

        km = kaplan_meier(dataset)
        km_frame = pd.DataFrame({
            "time": np.concatenate([[0.0], km.times]),
            "survival": np.concatenate([[1.0], km.survival]),
            "at_risk": np.concatenate([[len(dataset)], km.at_risk]),
            "events": np.concatenate([[0], km.events]),
        })
        table("km.csv", km_frame)
        plot("km.svg", km_frame["time"], {"Kaplan-Meier": km_frame["survival"].to_numpy()},
             "Kaplan-Meier estimate", "time", "survival", step=True)

        horizon = dataset.horizon_T
        scores, has_head = self._survival_scores(predictor, dataset)
        labels = survival_labels(dataset)
        censored = auroc_series(labels, scores, censored=True)
        uncensored = auroc_series(labels, scores, censored=False)
        table("auroc.csv", _threshold_frame([censored], horizon))
        table("auroc_uncensored.csv", _threshold_frame([uncensored], horizon))
        plot("auroc.svg", np.arange(horizon), {
            "censored": np.array(censored, dtype=np.float64),
            "uncensored": np.array(uncensored, dtype=np.float64),
        }, "AUROC per threshold", "threshold", "AUROC")

        if not has_head:
            logging.info("Service: model has no survival head, median and strata curves skipped")
            return written

        medians = median_survival_curve(scores)
        table("median_survival.csv", pd.DataFrame({
            "record": ["population"] + [str(i) for i in range(len(dataset))],
            "median_bin": pd.array([medians.population] + medians.per_individual, dtype="Int64"),
        }))
        population = scores.mean(axis=0)
        table("population_survival.csv", pd.DataFrame({"threshold": np.arange(horizon), "mean_survival": population}))
        plot("population_survival.svg", np.arange(horizon), {"population mean": population},
             "Mean predicted survival", "threshold", "survival")

        scaling = manifest.statistics.get("scaling", {})
        for stratum_config in strata or []:
            edges = np.asarray(stratum_config.bin_edges, dtype=np.float64)
            bounds = scaling.get(stratum_config.feature, {})
            if "min" in bounds and bounds["max"] > bounds["min"]:
                # edges are given in raw units; features are unit-scaled
                edges = (edges - bounds["min"]) / (bounds["max"] - bounds["min"])
            curves = strata_curves(predictor, dataset, stratum_config.feature, edges.tolist())
            rows = [c.curve if c.curve is not None else [None] * horizon for c in curves.strata]
            frame = _threshold_frame(rows, horizon)
            raw_edges = stratum_config.bin_edges
            frame.insert(0, "size", [c.size for c in curves.strata])
            frame.insert(0, "upper", raw_edges[1:])
            frame.insert(0, "lower", raw_edges[:-1])
            stem = _file_stem(stratum_config.feature)
            table(f"strata_{stem}.csv", frame)
            plot(f"strata_{stem}.svg", np.arange(horizon), {
                f"[{lo:g}, {hi:g}]": np.array(row, dtype=np.float64)
                for lo, hi, row, c in zip(raw_edges[:-1], raw_edges[1:], rows, curves.strata)
                if c.curve is not None
            }, f"Mean predicted survival by {stratum_config.feature}", "threshold", "survival")
        return written

    def curves(self, run_dir: Path, out_dir: Path, strata: list[StrataConfig] | None = None) -> list[Path]:
        try:
            dataset, manifest, predictor = self._load_run(run_dir)
            written = self._write_curves(dataset.subset(manifest.split.test), predictor, Path(out_dir), manifest, strata)
            logging.info(f"Service: wrote {len(written)} curve files to {out_dir}")
            return written
        except Exception as e:
            logging.error(f"Service: Error writing curves: {e}")
            raise

    def vimp(self, run_dir: Path, out_dir: Path, config: VimpConfig) -> VimpReport:
        try:
            dataset, manifest, predictor = self._load_run(run_dir)
            evaluation = dataset.subset(manifest.split.part(config.split))
            if len(evaluation) == 0:
                raise InvalidInputException(f"{config.split} split is empty")
            binary = indicator_features(manifest.spec, manifest.feature_names)
            report = vimp_report(predictor, evaluation, config, binary_features=binary)
            self.repository.save_table(
                Path(out_dir) / VIMP_FILE, pd.DataFrame([entry.model_dump() for entry in report.entries])
            )
            return report
        except Exception as e:
            logging.error(f"Service: Error computing VIMP: {e}")
            raise
