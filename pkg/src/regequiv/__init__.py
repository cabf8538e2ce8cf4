"""Regression as classification: equivalence transform, L1-error SVC dual,
regressability and J4 linearizing maps."""

from .dataset import (
    DataError,
    FoldAssignment,
    ReferencePoint,
    RegressionDataset,
    Scaler,
    center,
    load_csv,
    save_csv,
    split_folds,
    standardize,
    synth_generate,
)
from .equivalence import (
    BiBennettDataset,
    EquivalentClassificationDataset,
    bi_bennett_predict,
    bi_bennett_transform,
    predict_from_weights,
    to_classification,
)
from .linmap import (
    LinearHead,
    MlpNetwork,
    fit_linear_head,
    forward,
    j4_gradient,
    j4_loss,
    pca_project,
    predict,
    train_j4,
)
from .regressability import RegressabilityReport, classifiability, classifiability_at, neighborhood, regressability
from .svc import DualSolution, KktStatus, SvcProblem, kkt_classify, primal_objective, recover_weights, solve_dual

__version__ = "0.1.0"
