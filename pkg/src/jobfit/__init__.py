"""Worker-job fit: ability profiles, job error aggregation, Monte Carlo
success-probability estimation, and the analytic phase-transition /
merging / compression layer."""

from .ability import (
    AbilityProfile,
    NoiseModel,
    constant_profile,
    linear_profile,
    piecewise_profile,
    polynomial_profile,
    truncnorm_noise,
    truncnorm_var,
    uniform_noise,
)
from .job import ErrorModel, FIXTURE_MODEL, JobSpec, balanced_job
from .simulate import SimConfig, SimEstimate, Worker

__version__ = "0.1.0"

__all__ = [
    "AbilityProfile",
    "NoiseModel",
    "ErrorModel",
    "FIXTURE_MODEL",
    "JobSpec",
    "SimConfig",
    "SimEstimate",
    "Worker",
    "balanced_job",
    "constant_profile",
    "linear_profile",
    "piecewise_profile",
    "polynomial_profile",
    "truncnorm_noise",
    "truncnorm_var",
    "uniform_noise",
    "__version__",
]
