"""Desk-scale simulator for an optomechanically driven NV spin interface."""

from .errors import ConfigError, CurveError, FitError, NumericalError, StepSizeError, UnreachableError
from .params import DeviceParams, DriveConfig, ParamSet, SpinParams, default_config_path, derived_rates, load_config

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CurveError",
    "DeviceParams",
    "DriveConfig",
    "FitError",
    "NumericalError",
    "ParamSet",
    "SpinParams",
    "StepSizeError",
    "UnreachableError",
    "default_config_path",
    "derived_rates",
    "load_config",
]
