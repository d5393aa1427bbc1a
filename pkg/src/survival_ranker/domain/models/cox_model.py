from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel


@dataclass(frozen=True, eq=False)
class CoxModel:
    """Fitted linear Cox coefficients with fit diagnostics."""

    theta: np.ndarray
    final_nll: float
    iterations: int
    converged: bool
    l2_penalty: float
    feature_names: tuple[str, ...] = ()
    gradient_norm: float = float("nan")
    descent_log: tuple[float, ...] = field(default_factory=tuple)

    def to_manifest(self) -> "CoxModelManifest":
        names = self.feature_names or tuple(f"x{k}" for k in range(self.theta.shape[0]))
        return CoxModelManifest(
            coefficients={name: float(value) for name, value in zip(names, self.theta)},
            feature_order=list(names),
            final_nll=self.final_nll,
            iterations=self.iterations,
            converged=self.converged,
            l2_penalty=self.l2_penalty,
            gradient_norm=self.gradient_norm,
            descent_log=list(self.descent_log),
        )


class CoxModelManifest(BaseModel):
    kind: str = "cox"
    version: int = 1
    coefficients: dict[str, float]
    feature_order: list[str]
    final_nll: float
    iterations: int
    converged: bool
    l2_penalty: float
    gradient_norm: float
    descent_log: list[float] = []

    def to_model(self) -> CoxModel:
        return CoxModel(
            theta=np.array([self.coefficients[name] for name in self.feature_order], dtype=np.float64),
            final_nll=self.final_nll,
            iterations=self.iterations,
            converged=self.converged,
            l2_penalty=self.l2_penalty,
            feature_names=tuple(self.feature_order),
            gradient_norm=self.gradient_norm,
            descent_log=tuple(self.descent_log),
        )
