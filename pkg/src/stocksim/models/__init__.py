from stocksim.models.ensemble import (
    EnsembleConfig,
    TrainedModel,
    direction_from_prediction,
    directions,
    fit_gradient_boosting,
    fit_model,
    fit_random_forest,
    predict,
)
from stocksim.models.tree import Tree, TreeNode, fit_tree

__all__ = [
    "EnsembleConfig",
    "TrainedModel",
    "Tree",
    "TreeNode",
    "direction_from_prediction",
    "directions",
    "fit_gradient_boosting",
    "fit_model",
    "fit_random_forest",
    "fit_tree",
    "predict",
]
