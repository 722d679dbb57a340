"""Likelihood-free posterior inference via conditional density estimation.

Workflow: simulate (theta, x) pairs near the observed summaries with
rejection sampling, fit conditional density estimators to the accepted
pairs, and tune/select/compare them with a surrogate loss that is estimable
from held-out pairs alone -- no knowledge of the true posterior required.
Benchmark models with closed-form posteriors make the true error computable
for validation studies.
"""

from .basis import FourierBasis, padded_range
from .errors import (BudgetExhaustedError, CapabilityError,
                     ConfigurationError, EstimatorError)
from .estimators import (DensityEstimate, OracleDensity, StaticDensity,
                         fit_abc_kde, fit_adjusted_kde, fit_nn_kde,
                         fit_series_cde, regression_adjust)
from .loss import (ComparisonResult, LossReport, compare_pair, select,
                   surrogate_loss, true_ise)
from .models import (BivariateGaussianMeanModel, GaussianMeanModel,
                     GaussianMixtureMeanModel, NormalGammaModel,
                     PosteriorOracle, build_model)
from .regression import (NearestNeighborsRegression, TreeEnsembleRegression,
                         build_regressor)
from .sampling import (DistanceFn, TrainingSet, rejection_sample,
                       split_train_validation)
from .summaries import (ImportanceScores, Standardizer, SummaryVector,
                        compute_summaries, importance, select_by_threshold,
                        summary_matrix)

__version__ = "0.1.0"
