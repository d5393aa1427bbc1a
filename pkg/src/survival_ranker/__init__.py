"""
Public API: Only expose ExperimentController.
"""
from .application.experiment_controller import ExperimentController

__all__ = ["ExperimentController"]
