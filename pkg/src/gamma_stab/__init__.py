"""Gamma-radonifying norms, frame constants and stability certificates for
finite-dimensional linear systems driven by cylindrical noise."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .frames import (  # noqa: E402
    ExponentialFamily,
    FrameConstants,
    SampledFamily,
    frame_constants_cck,
    frame_constants_gram,
    gram_matrix,
)
from .gaussian import GaussianSumEstimate, MonteCarlo, gamma_norm, gaussian_sum_norm  # noqa: E402
from .scp import ScpProblem, datko_pazy_certify, invariant_measure_exists, solution_exists  # noqa: E402
from .semigroup import C_UNIV, Generator, resolvent_rbound_datko, uniform_orbit_bound  # noqa: E402
from .spaces import SpaceSpec  # noqa: E402

__all__ = [
    "ExponentialFamily",
    "FrameConstants",
    "SampledFamily",
    "frame_constants_cck",
    "frame_constants_gram",
    "gram_matrix",
    "GaussianSumEstimate",
    "MonteCarlo",
    "gamma_norm",
    "gaussian_sum_norm",
    "ScpProblem",
    "datko_pazy_certify",
    "invariant_measure_exists",
    "solution_exists",
    "C_UNIV",
    "Generator",
    "resolvent_rbound_datko",
    "uniform_orbit_bound",
    "SpaceSpec",
]
