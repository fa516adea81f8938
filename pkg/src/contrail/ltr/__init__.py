"""Learning-to-rank core: ranking datasets, NearMiss-3 balancing, bagged
gradient-boosted-tree training with rank-weighted pairwise gradients, MAP
evaluation with claim-level cross-validation and grid search, and keyword
selection."""

from .dataset import QueryGroup, RankingDataset, Row, assemble, read_letor, standardize_stats, write_letor
from .nearmiss import nearmiss3
from .lambdamart import Hyperparams, RankerModel, RegressionTree, train
from .evaluate import (
    average_precision,
    baseline_compare,
    cross_validate,
    grid_search,
    mean_average_precision,
    rank_group,
    select_keywords,
)
from .baselines import FirstTokensBaseline, TfidfTokensBaseline

__all__ = [
    "QueryGroup",
    "RankingDataset",
    "Row",
    "assemble",
    "read_letor",
    "standardize_stats",
    "write_letor",
    "nearmiss3",
    "Hyperparams",
    "RankerModel",
    "RegressionTree",
    "train",
    "average_precision",
    "baseline_compare",
    "cross_validate",
    "grid_search",
    "mean_average_precision",
    "rank_group",
    "select_keywords",
    "FirstTokensBaseline",
    "TfidfTokensBaseline",
]
