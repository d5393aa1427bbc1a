from pydantic import BaseModel, Field

from survival_ranker.domain.models.dataset_spec import DatasetFingerprint


class VimpEntry(BaseModel):
    feature: str
    baseline_error: float
    perturbed_error: float
    vimp: float
    vimp_sd: float


class VimpReport(BaseModel):
    """Per-feature importance, sorted by decreasing vimp. Error = 1 - C-index."""

    entries: list[VimpEntry]
    epsilon: float
    flip_prob: float
    seed: int
    repetitions: int
    split: str


class StratumCurve(BaseModel):
    lower: float
    upper: float
    size: int
    # None when the stratum has no member
    curve: list[float] | None = None


class StrataCurves(BaseModel):
    feature: str
    bin_edges: list[float]
    strata: list[StratumCurve]


class MedianSurvival(BaseModel):
    per_individual: list[int | None]
    population: int | None


class SplitResult(BaseModel):
    seed: int
    test_c_index: float | None = None
    test_c_index_s1: float | None = None
    test_c_index_s2_mean: float | None = None
    validation_c_index: float | None = None
    chosen_epoch: int | None = None
    converged: bool | None = None
    auroc: list[float | None] = Field(default_factory=list)
    auroc_uncensored: list[float | None] = Field(default_factory=list)
    monotonicity_violation_rate: float | None = None
    failure: str | None = None


class MetricReport(BaseModel):
    """Deterministic body of one run; wall-clock timings live in a separate document."""

    name: str
    dataset: str
    model: str
    fingerprint: DatasetFingerprint
    seeds: list[int]
    hyperparameters: dict
    splits: list[SplitResult]
    mean_c_index: float | None = None
    sd_c_index: float | None = None

    @property
    def primary(self) -> SplitResult:
        return self.splits[0]


class TimingReport(BaseModel):
    seconds_per_split: list[float]
    total_seconds: float
