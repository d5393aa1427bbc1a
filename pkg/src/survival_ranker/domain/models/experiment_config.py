from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from survival_ranker.domain.models.network import (
    Activation,
    Architecture,
    HiddenLayer,
    S1Mode,
    SelectionScore,
    TrainConfig,
)


class ModelKind(str, Enum):
    COX = "cox"
    MLP_EFRON = "mlp-efron"
    MLP_RANK = "mlp-rank"
    MLP_EFRON_RANK = "mlp-efron-rank"

    @property
    def is_network(self) -> bool:
        return self != ModelKind.COX


def _check_fractions(fractions: tuple[float, float, float]) -> tuple[float, float, float]:
    if any(f <= 0 for f in fractions):
        raise ValueError(f"split fractions must be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    return fractions


class NetworkSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    hidden_layers: list[HiddenLayer] = Field(default_factory=lambda: [HiddenLayer(width=32)])
    s1_mode: S1Mode = S1Mode.LOG_HAZARD

    def architecture(self, input_dim: int, horizon_T: int) -> Architecture:
        return Architecture(
            input_dim=input_dim,
            hidden_layers=self.hidden_layers,
            horizon_T=horizon_T,
            s1_mode=self.s1_mode,
        )


class CoxSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    l2: float = Field(default=0.0, ge=0)
    max_iters: int = Field(default=100, ge=1)
    tolerance: float = Field(default=1e-8, gt=0)


class VimpConfig(BaseModel):
    """Perturbation importance: noise sd epsilon * column sd, binary flips with flip_prob."""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(default=0.1, gt=0)
    flip_prob: float = Field(default=0.1, ge=0, le=1)
    repetitions: int = Field(default=10, ge=1)
    seed: int = 0
    split: str = "test"
    workers: int = Field(default=1, ge=1)

    @field_validator("split")
    @classmethod
    def _known_split(cls, split: str) -> str:
        if split not in ("train", "validation", "test"):
            raise ValueError(f"unknown split {split!r}")
        return split


class StrataConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    feature: str
    bin_edges: list[float]

    @field_validator("bin_edges")
    @classmethod
    def _increasing(cls, edges: list[float]) -> list[float]:
        if len(edges) < 2:
            raise ValueError("bin_edges needs at least two edges")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("bin_edges must be strictly increasing")
        return edges


class ExperimentConfig(BaseModel):
    """
    One benchmark run: dataset spec, split protocol, model kind and its settings.

    The model kind fixes the active loss terms: mlp-efron trains without the ranking
    loss, mlp-rank without the Efron loss, mlp-efron-rank with both.
    """

    model_config = ConfigDict(frozen=True)

    name: str = "experiment"
    spec: str
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0
    splits: int = Field(default=1, ge=1)
    model: ModelKind = ModelKind.COX
    cox: CoxSettings = Field(default_factory=CoxSettings)
    network: NetworkSettings = Field(default_factory=NetworkSettings)
    train: TrainConfig = Field(default_factory=TrainConfig)
    vimp: VimpConfig = Field(default_factory=VimpConfig)
    strata: list[StrataConfig] = Field(default_factory=list)

    @field_validator("fractions")
    @classmethod
    def _fractions_valid(cls, fractions: tuple[float, float, float]) -> tuple[float, float, float]:
        return _check_fractions(fractions)

    def effective_train_config(self, seed: int | None = None) -> TrainConfig:
        """Training settings with the loss weights implied by the model kind."""
        updates: dict = {"seed": self.seed if seed is None else seed}
        if self.model == ModelKind.MLP_EFRON:
            updates.update(lambda_rank=0.0, efron_weight=1.0)
        elif self.model == ModelKind.MLP_RANK:
            updates.update(
                efron_weight=0.0,
                lambda_rank=self.train.lambda_rank or 1.0,
                selection_score=SelectionScore.S2_MEAN,
            )
        elif self.model == ModelKind.MLP_EFRON_RANK:
            updates.update(efron_weight=1.0)
        return self.train.model_copy(update=updates)


class RealRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    low: float
    high: float
    log: bool = False

    @model_validator(mode="after")
    def _ordered(self) -> "RealRange":
        if self.high < self.low:
            raise ValueError(f"range [{self.low}, {self.high}] is empty")
        if self.log and self.low <= 0:
            raise ValueError("log-uniform ranges need a positive lower bound")
        return self


class SearchSpace(BaseModel):
    """
    Random-search ranges around a base experiment. Real ranges are sampled uniformly
    (log-uniformly when `log`), lists are sampled as choices.
    """

    model_config = ConfigDict(frozen=True)

    experiment: ExperimentConfig
    trials: int = Field(default=30, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    depths: list[int] = Field(default_factory=lambda: [1, 2, 3])
    widths: list[int] = Field(default_factory=lambda: [8, 16, 32, 64])
    activations: list[Activation] = Field(default_factory=lambda: [Activation.RELU])
    batch_norm: list[bool] = Field(default_factory=lambda: [False, True])
    dropout: RealRange = RealRange(low=0.0, high=0.5)
    learning_rate: RealRange = RealRange(low=1e-5, high=1e-2, log=True)
    batch_sizes: list[int] = Field(default_factory=lambda: [32, 64, 128])
    lambda_rank: RealRange = RealRange(low=0.1, high=10.0, log=True)
    l1: RealRange = RealRange(low=0.0, high=1e-3)
    l2: RealRange = RealRange(low=0.0, high=1e-3)
    clip_norm: RealRange = RealRange(low=1.0, high=10.0)
    s1_modes: list[S1Mode] = Field(default_factory=lambda: [S1Mode.LOG_HAZARD])

    @model_validator(mode="after")
    def _sampled_configs_valid(self) -> "SearchSpace":
        if not self.experiment.model.is_network:
            raise ValueError("random search needs a network model kind")
        for name in ("depths", "widths", "activations", "batch_norm", "batch_sizes", "s1_modes"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if min(self.depths) < 0 or min(self.widths) < 1:
            raise ValueError("depths must be >= 0 and widths >= 1")
        if min(self.batch_sizes) < 2:
            raise ValueError("batch sizes must be at least 2")
        if self.dropout.low < 0 or self.dropout.high >= 1:
            raise ValueError("dropout range must lie in [0, 1)")
        if self.learning_rate.low <= 0 or self.clip_norm.low <= 0:
            raise ValueError("learning_rate and clip_norm ranges must be positive")
        if min(self.lambda_rank.low, self.l1.low, self.l2.low) < 0:
            raise ValueError("lambda_rank, l1 and l2 ranges must be non-negative")
        return self


class TrialRecord(BaseModel):
    trial: int
    status: str
    validation_c_index: float | None = None
    chosen_epoch: int | None = None
    epochs: int | None = None
    learning_rate: float
    batch_size: int
    lambda_rank: float
    l1: float
    l2: float
    clip_norm: float
    depth: int
    widths: str
    activation: str
    dropout: float
    batch_norm: bool
    s1_mode: str
    error: str = ""
