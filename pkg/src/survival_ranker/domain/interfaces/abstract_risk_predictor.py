from abc import ABC, abstractmethod

import numpy as np


class AbstractRiskPredictor(ABC):
    """
    Abstract base class for fitted models queried by the analysis tools.
    Implementations must not change their parameters when queried.
    """
    @abstractmethod
    def predict_risk(self, features: np.ndarray) -> np.ndarray:
        """
        Risk score per record (higher = earlier expected event).

        :param features: (n, d) encoded features.
        """
        raise NotImplementedError("This method should be overridden by subclasses.")

    @abstractmethod
    def predict_survival(self, features: np.ndarray) -> np.ndarray:
        """
        Per-threshold survival probabilities, (n, horizon_T).
        """
        raise NotImplementedError("This method should be overridden by subclasses.")
