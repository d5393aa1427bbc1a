# INTERNAL MODULE: Not for direct import outside survival_ranker
if not __name__.startswith("survival_ranker"): raise ImportError("_risk_predictors is internal and cannot be imported directly.")

import numpy as np

from survival_ranker.domain.exceptions.invalid_input_exception import InvalidInputException
from survival_ranker.domain.interfaces.abstract_risk_predictor import AbstractRiskPredictor
from survival_ranker.domain.models.cox_model import CoxModel
from survival_ranker.domain.models.network import NetworkState, SelectionScore
from survival_ranker.domain.services._cox_service import predict_risk
from survival_ranker.domain.services._network import predict
from survival_ranker.domain.services._training_service import risk_scores


class CoxRiskPredictor(AbstractRiskPredictor):
    def __init__(self, model: CoxModel) -> None:
        self.model = model

    def predict_risk(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(predict_risk(self.model, np.atleast_2d(features)))

    def predict_survival(self, features: np.ndarray) -> np.ndarray:
        raise InvalidInputException("a Cox model has no survival head")


class NetworkRiskPredictor(AbstractRiskPredictor):
    def __init__(self, state: NetworkState, selection: SelectionScore = SelectionScore.S1) -> None:
        self.state = state
        self.selection = selection

    def predict_risk(self, features: np.ndarray) -> np.ndarray:
        return risk_scores(self.state, features, self.selection)

    def predict_survival(self, features: np.ndarray) -> np.ndarray:
        _, s2 = predict(self.state, np.atleast_2d(features))
        return s2
