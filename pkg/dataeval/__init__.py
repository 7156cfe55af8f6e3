"""
dataeval
Datasets, subject folds, metrics and the cross-validated experiment
"""
