from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    LINEAR = "linear"


class S1Mode(str, Enum):
    """How the bottleneck value s1 becomes the positive Efron score s."""

    LOG_HAZARD = "log-hazard"
    HAZARD = "hazard"


class RankOrientation(str, Enum):
    SURVIVOR_MINUS_EVENT = "survivor_minus_event"
    EVENT_MINUS_SURVIVOR = "event_minus_survivor"


class SelectionScore(str, Enum):
    S1 = "s1"
    S2_MEAN = "s2_mean"


class HiddenLayer(BaseModel):
    model_config = ConfigDict(frozen=True)

    width: int = Field(gt=0)
    activation: Activation = Activation.RELU
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    batch_norm: bool = False


class Architecture(BaseModel):
    """
    Hidden stack → single linear bottleneck unit (s1) → horizon_T sigmoid units (s2).
    The head reads the bottleneck only.
    """

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(gt=0)
    hidden_layers: list[HiddenLayer] = Field(default_factory=list)
    horizon_T: int = Field(gt=0)
    s1_mode: S1Mode = S1Mode.LOG_HAZARD

    @property
    def bottleneck_width(self) -> int:
        return 1


class TrainConfig(BaseModel):
    """
    Defaults: Adam with learning_rate 1e-5 and batch_size 32, lambda_rank 1.0,
    no L1/L2, clip_norm 5.0, 200 epochs with patience 20.
    """

    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(default=1e-5, gt=0)
    batch_size: int = Field(default=32, ge=2)
    lambda_rank: float = Field(default=1.0, ge=0)
    efron_weight: float = Field(default=1.0, ge=0)
    l1: float = Field(default=0.0, ge=0)
    l2: float = Field(default=0.0, ge=0)
    clip_norm: float = Field(default=5.0, gt=0)
    max_epochs: int = Field(default=200, ge=1)
    patience: int = Field(default=20, ge=0)
    seed: int = 0
    rank_orientation: RankOrientation = RankOrientation.SURVIVOR_MINUS_EVENT
    selection_score: SelectionScore = SelectionScore.S1
    bn_momentum: float = Field(default=0.9, ge=0, lt=1)


@dataclass(eq=False)
class NetworkState:
    """
    Parameters and batch-norm buffers of one network, keyed by
    "<layer>.<tensor>" (hidden0.weight, hidden0.gamma, bottleneck.bias, head.weight, ...).
    """

    architecture: Architecture
    parameters: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    training: bool = False

    def copy(self) -> "NetworkState":
        return NetworkState(
            architecture=self.architecture,
            parameters={k: v.copy() for k, v in self.parameters.items()},
            buffers={k: v.copy() for k, v in self.buffers.items()},
            training=self.training,
        )

    def weight_names(self) -> list[str]:
        return [name for name in self.parameters if name.endswith(".weight")]

    def to_manifest(self) -> "NetworkManifest":
        tensors = {
            name: TensorRecord(shape=list(value.shape), values=value.reshape(-1).tolist())
            for name, value in list(self.parameters.items()) + list(self.buffers.items())
        }
        return NetworkManifest(
            architecture=self.architecture,
            parameter_names=list(self.parameters),
            buffer_names=list(self.buffers),
            tensors=tensors,
        )


class TensorRecord(BaseModel):
    shape: list[int]
    values: list[float]

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64).reshape(self.shape)


class NetworkManifest(BaseModel):
    """Versioned plain-text parameter dump: shapes plus row-major values."""

    kind: str = "network"
    version: int = 1
    architecture: Architecture
    # score the model is ranked by when queried for risk
    selection_score: SelectionScore = SelectionScore.S1
    parameter_names: list[str]
    buffer_names: list[str]
    tensors: dict[str, TensorRecord]

    @field_validator("tensors")
    @classmethod
    def _shapes_match(cls, tensors: dict[str, TensorRecord]) -> dict[str, TensorRecord]:
        for name, record in tensors.items():
            if int(np.prod(record.shape)) != len(record.values):
                raise ValueError(f"tensor {name}: shape {record.shape} does not match {len(record.values)} values")
        return tensors

    def to_state(self) -> NetworkState:
        return NetworkState(
            architecture=self.architecture,
            parameters={name: self.tensors[name].to_array() for name in self.parameter_names},
            buffers={name: self.tensors[name].to_array() for name in self.buffer_names},
            training=False,
        )


class EpochRecord(BaseModel):
    epoch: int
    efron_loss: float
    rank_loss: float
    penalty: float
    total_loss: float
    skipped_efron_batches: int
    skipped_rank_batches: int
    validation_c_index: float


class TrainHistory(BaseModel):
    epochs: list[EpochRecord] = Field(default_factory=list)
    chosen_epoch: int = 0
    stopped_early: bool = False

    @property
    def best_validation(self) -> float:
        return max((e.validation_c_index for e in self.epochs), default=float("nan"))
