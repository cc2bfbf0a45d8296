"""Subset selection and the classifier suite."""
from .design import Classifier, Standardization, StandardizedDesign, design_from_arrays, standardize, stratified_folds
from .discriminant import LDAModel, QDAModel, discriminant_lda, discriminant_qda, fit_lda, fit_qda
from .kmeans import KMeansModel, fit_kmeans, kmeans_accuracy, within_cluster_objective
from .knn import KNNModel, fit_knn, predict_knn
from .logistic import LogisticModel, fit_logistic, predict_logistic
from .serialize import MODEL_TYPES, load_model, model_from_dict, model_to_dict, save_model
from .subsets import SubsetReport, best_subsets, write_subset_csv
from .svm import KernelSpec, SVMModel, fit_svm, kernel_eval, predict_svm, tune_svm
from .tree import ForestModel, TreeModel, fit_forest, fit_tree, prune_tree

__all__ = [name for name in dir() if not name.startswith("_")]
