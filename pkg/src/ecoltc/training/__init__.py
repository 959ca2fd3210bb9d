"""Preprocessing, datasets, BPTT training, searches and the estimator wrappers."""

from .bptt import LossHistory, TrainConfig, chain_loss_and_gradient, loss_and_gradient, train_bptt, train_controller_network
from .dataset import Dataset, carve_validation, read_dataset_csv, split_dataset, write_dataset_csv
from .estimators import LtcController, LtcRegressor, load_model, rmse, save_model, train_controller
from .preprocessing import Normalizer, apply, fit_normalizer, invert, rolling_average
from .search import hidden_size_search, input_ablation, is_flat

SurrogateModel = LtcRegressor

__all__ = [
    "Dataset",
    "LossHistory",
    "LtcController",
    "LtcRegressor",
    "Normalizer",
    "SurrogateModel",
    "TrainConfig",
    "apply",
    "carve_validation",
    "chain_loss_and_gradient",
    "fit_normalizer",
    "hidden_size_search",
    "input_ablation",
    "invert",
    "is_flat",
    "load_model",
    "loss_and_gradient",
    "read_dataset_csv",
    "rmse",
    "rolling_average",
    "save_model",
    "split_dataset",
    "train_bptt",
    "train_controller",
    "train_controller_network",
    "write_dataset_csv",
]
