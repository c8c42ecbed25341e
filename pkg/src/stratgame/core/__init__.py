from .geometry import (
    EXHAUSTIVE_LIMIT,
    MatrixSpace,
    MetricSpace,
    ORIGIN,
    PermutationSphereSpace,
    Point,
    PointNotInSpace,
    ScaledBasisSpace,
    StarSpace,
    TOL,
    basis,
    iter_permutations,
    matrix_point,
    perm_point,
    scaled_basis,
    validate_metric,
)
from .predictors import (
    ALL_NEGATIVE,
    ClassDistanceIndex,
    Hypothesis,
    HypothesisClass,
    Predictor,
    UnionPredictor,
    distance_to_hypothesis,
    positive_points,
    predict,
    singleton_class,
    union_distance,
)
from .response import (
    Agent,
    Ball,
    Explicit,
    ManipulationSet,
    TieBreak,
    best_response,
    population_loss,
    strategic_loss,
    strategic_loss_randomized,
)
