from .grid import (DEFAULT_GRIDS, GridSearchResult, HyperGrid, config_seed, fit_baseline,
                   grid_search, stratified_folds)
from .knn import KnnModel, knn_fit, knn_predict
from .nb import NaiveBayesModel, nb_fit, nb_predict
from .rf import RandomForestModel, rf_fit, rf_predict
from .svm import SvmModel, svm_fit, svm_predict
