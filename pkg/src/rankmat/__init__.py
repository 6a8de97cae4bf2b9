"""Matrix factorization with log and popularity-rank scaled targets."""

from .dataset import RatingDataset, SplitPair, load_ratings, split
from .metrics import MetricReport, degree_of_matthew_effect, mae, top_n_recommend, zipf_slope
from .models import EmbeddingModel, ModelKind, grad_pair, loss, predict_rating, target
from .ranking import RankBasis, RankTable, compute_ranks
from .trainer import TrainConfig, TrainTrace, grid_search, init_embeddings, train

__all__ = [
    "EmbeddingModel",
    "MetricReport",
    "ModelKind",
    "RankBasis",
    "RankTable",
    "RatingDataset",
    "SplitPair",
    "TrainConfig",
    "TrainTrace",
    "compute_ranks",
    "degree_of_matthew_effect",
    "grad_pair",
    "grid_search",
    "init_embeddings",
    "load_ratings",
    "loss",
    "mae",
    "predict_rating",
    "split",
    "target",
    "top_n_recommend",
    "train",
    "zipf_slope",
]
