"""Surrogate regional CBF estimation from resting-state BOLD spectral power.

Pipeline: ROI time series -> binned periodogram features -> Gaussian-kernel
epsilon-SVR (SMO solver) under nested 10-fold cross-validation -> correlation,
group-comparison and cognition reports.
"""

from cbfsurrogate.crossval import (
    FoldAssignment,
    GridSpec,
    HyperGrid,
    OofPrediction,
    grid_search,
    make_folds,
    nested_cv_predict,
)
from cbfsurrogate.datamodel import (
    Cohort,
    RegionKey,
    RoiAtlas,
    RoiTimeSeries,
    SubjectRecord,
    ValidationError,
    aggregate_region,
    load_cohort,
)
from cbfsurrogate.spectral import (
    BinGrid,
    FrequencyRange,
    SpectralFeatureVector,
    bin_power,
    detrend_demean,
    periodogram,
    select_bins,
    spectral_features,
)
from cbfsurrogate.svr import (
    ConvergenceError,
    SvrHyperParams,
    SvrModel,
    predict_svr,
    rbf_kernel,
    train_svr,
)
from cbfsurrogate.synthcohort import SynthConfig, generate_cohort

__version__ = "0.1.0"
