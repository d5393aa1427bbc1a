# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_optimizers is internal and cannot be imported directly.")

from dataclasses import dataclass, field

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException
from survival_ranker.domain.models.network import NetworkState

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g ** 2)) for g in grads.values())))


def clip_gradients(grads: dict[str, np.ndarray], clip_norm: float) -> dict[str, np.ndarray]:
    """Scale every gradient by clip_norm / g when the global L2 norm g exceeds clip_norm."""
    if clip_norm <= 0:
        raise InvalidInputException(f"clip_norm must be positive, got {clip_norm}")
    norm = global_norm(grads)
    if norm <= clip_norm:
        return grads
    scale = clip_norm / norm
    return {name: g * scale for name, g in grads.items()}


@dataclass
class AdamMoments:
    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, state: NetworkState) -> "AdamMoments":
        return cls(
            first={k: np.zeros_like(v) for k, v in state.parameters.items()},
            second={k: np.zeros_like(v) for k, v in state.parameters.items()},
        )


def adam_step(
    state: NetworkState,
    grads: dict[str, np.ndarray],
    learning_rate: float,
    step_count: int,
    moments: AdamMoments,
) -> NetworkState:
    """
    One bias-corrected Adam update of `state` in place.

    :param step_count: 1-based index of this step.
    :raises NumericFailureException: a gradient is non-finite; nothing is updated.
    """
    if step_count < 1:
        raise InvalidInputException(f"step_count must be at least 1, got {step_count}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericFailureException(f"non-finite gradient for {name}, Adam step rejected")

    first_correction = 1.0 - ADAM_BETA1 ** step_count
    second_correction = 1.0 - ADAM_BETA2 ** step_count
    for name, g in grads.items():
        moments.first[name] = ADAM_BETA1 * moments.first[name] + (1.0 - ADAM_BETA1) * g
        moments.second[name] = ADAM_BETA2 * moments.second[name] + (1.0 - ADAM_BETA2) * g ** 2
        m_hat = moments.first[name] / first_correction
        v_hat = moments.second[name] / second_correction
        state.parameters[name] = state.parameters[name] - learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON)
    return state
