"""Random forests with post-hoc leaf regularization.

Two calibrators rewrite the leaf probabilities of a fitted forest:
Hierarchical Shrinkage and a Beta-posterior smoother that pools the class
counts along each root-to-leaf path.
"""

from treesmooth.dataset import Dataset, load_any, load_csv, load_registered
from treesmooth.forest import FittedForest, ForestConfig, fit_forest, predict_proba
from treesmooth.regularize import RegularizerSpec, apply

__all__ = [
    "Dataset",
    "FittedForest",
    "ForestConfig",
    "RegularizerSpec",
    "apply",
    "fit_forest",
    "load_any",
    "load_csv",
    "load_registered",
    "predict_proba",
]

__version__ = "0.1.0"
