"""Sparse Bayesian latent-space model for integer-weighted networks."""

from .errors import (
    DataError,
    DimensionError,
    EmptyChain,
    InitError,
    InvalidPivots,
    InvalidState,
    IoError,
    LsnetError,
    NumericError,
    TestError,
    UsageError,
)
from .likelihood import InterpData, interp_log_lik, log_posterior, log_prior, network_log_lik
from .model import (
    Cell,
    Hyperparams,
    LatentState,
    LoadingState,
    RestrictionKind,
    RestrictionPattern,
    WeightedNetwork,
    build_pattern,
    validate_state,
)
from .sampler import ChainRecord, ChainResult, SamplerConfig, State, run_chain

__version__ = "0.1.0"
