"""Derivative-informed neural surrogates of the Lorenz-63 timestepper for 4D-Var."""
from .errors import (
    AdjSurrogateError,
    DimensionMismatch,
    MissingAdjointData,
    NonFiniteLoss,
    NonFiniteState,
    NotPositiveDefinite,
    ZeroVariance,
)
from .estimator import SurrogateRegressor
from .fourdvar import B0, BfgsOptions, FourDVarProblem, SequentialConfig, bfgs_minimize, exact_model, surrogate_model
from .lorenz import IntegratorSpec, LorenzParams, ObsOperator
from .smallmat import RngStream, cholesky
from .training import METHODS, TrainConfig, train

__version__ = "0.1.0"
