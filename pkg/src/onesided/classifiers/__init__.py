from .distances import Metric, cosine_distance, euclidean_distance, pairwise_distances
from .knn import Knn2Model, Knn2Params, knn2_fit, knn2_predict, knn2_predict_many
from .oknn import (OkNNDecision, OkNNModel, OkNNParams, oknn_accepts, oknn_fit,
                   oknn_predict, oknn_predict_many, oknn_scores)
from .persistence import load_model, save_model
from .svm import SvmModel, SvmParams, svm_fit, svm_margins, svm_predict

__all__ = [
    "Metric", "cosine_distance", "euclidean_distance", "pairwise_distances",
    "Knn2Model", "Knn2Params", "knn2_fit", "knn2_predict", "knn2_predict_many",
    "OkNNDecision", "OkNNModel", "OkNNParams", "oknn_accepts", "oknn_fit",
    "oknn_predict", "oknn_predict_many", "oknn_scores",
    "load_model", "save_model",
    "SvmModel", "SvmParams", "svm_fit", "svm_margins", "svm_predict",
]
