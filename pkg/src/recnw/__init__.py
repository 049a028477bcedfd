"""Recursive kernel estimation of a regression function and its derivative."""

from ._backend import BACKEND
from .bandwidth import CvReport, cv_oracle, cv_predictive
from .estimator import (BandwidthSchedule, DensityModel, EstimatorState, InvalidRecordError,
                        UNIFORM01, UnsupportedPointError, batch_oracle)
from .kernels import EPANECHNIKOV, GAUSSIAN, Kernel, custom_kernel, get_kernel

__all__ = [
    "BACKEND", "CvReport", "cv_oracle", "cv_predictive", "BandwidthSchedule", "DensityModel",
    "EstimatorState", "InvalidRecordError", "UNIFORM01", "UnsupportedPointError", "batch_oracle",
    "EPANECHNIKOV", "GAUSSIAN", "Kernel", "custom_kernel", "get_kernel",
]
