from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np


class AbstractCurvePlotter(ABC):
    """
    Abstract base class for curve renderers.
    Renderers must produce identical files for identical inputs.
    """
    @abstractmethod
    def plot_lines(
        self,
        path: Path,
        x: np.ndarray,
        series: dict[str, np.ndarray],
        title: str,
        xlabel: str,
        ylabel: str,
        step: bool = False,
    ) -> None:
        """
        Draw one line per entry of `series` against `x`. NaN values are left as gaps.

        :param step: draw post-step lines (survival curves).
        """
        raise NotImplementedError("This method should be overridden by subclasses.")
