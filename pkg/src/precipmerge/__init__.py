"""precipmerge: merge gridded satellite precipitation with rain-gauge
observations through regression, and benchmark the candidate algorithms.

The package assembles per-(station, day) regression samples from gauge
archives and two gridded products, fits a linear baseline plus three tree
ensembles, and scores them with median-squared-error based relative skill
and rankings under two-fold cross-validation.
"""

__version__ = "0.1.0"
