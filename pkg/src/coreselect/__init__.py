"""coreselect: explanation-metric core-set selection for 1D signal classifiers.

The package trains a small from-scratch 1D CNN, scores incoming samples by
how far they sit from the model's internal representation (DTW, scalogram
MSE, rhythm slack), selects a budgeted core-set per class and metric, and
fine-tunes incrementally with rollback on accuracy regressions.
"""

__version__ = "0.1.0"
