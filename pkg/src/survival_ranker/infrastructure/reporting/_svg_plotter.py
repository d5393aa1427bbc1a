import logging
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from survival_ranker.domain.interfaces.abstract_curve_plotter import AbstractCurvePlotter

if not __name__.startswith("survival_ranker"):
    raise ImportError("_svg_plotter is internal and cannot be imported directly.")

# fixed ids and no timestamp: identical inputs give identical files
_SVG_SETTINGS = {"svg.hashsalt": "survival-ranker", "svg.fonttype": "none"}


class SvgCurvePlotter(AbstractCurvePlotter):
    """
    Line plots rendered to SVG with matplotlib.
    """

    def __init__(self, width: float = 6.0, height: float = 4.0) -> None:
        self.size = (width, height)

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
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with matplotlib.rc_context(_SVG_SETTINGS):
            figure = Figure(figsize=self.size)
            axes = figure.add_subplot()
            for label, values in series.items():
                if step:
                    axes.step(x, values, where="post", label=label)
                else:
                    axes.plot(x, values, marker=".", label=label)
            axes.set_title(title)
            axes.set_xlabel(xlabel)
            axes.set_ylabel(ylabel)
            if len(series) > 1:
                axes.legend()
            figure.savefig(path, format="svg", metadata={"Date": None})
        logging.debug(f"Plot written to {path}")
