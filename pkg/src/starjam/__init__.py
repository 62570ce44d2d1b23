"""Secure NOMA downlink with a tertiary-mode (reflect/transmit/jam) STAR-RIS."""
__version__ = "0.1.0"

# the optimizer entry point lives in starjam.optimize (kept out of this namespace so the
# submodule name is not shadowed)

from .channels import ChannelRealization, generate_channels
from .config import (AlgorithmParams, ChannelParams, ConfigError, Geometry, SystemConfig, parse_config,
                     serialize_config, validate)
from .optimize import SolutionRecord, evaluate_solution
from .rates import BeamformerSolution, RateReport, StarRisState, compute_rates
from .schemes import SCHEME_NAMES, Scheme

__all__ = [
    "AlgorithmParams", "BeamformerSolution", "ChannelParams", "ChannelRealization", "ConfigError",
    "Geometry", "RateReport", "SCHEME_NAMES", "Scheme", "SolutionRecord", "StarRisState", "SystemConfig",
    "compute_rates", "evaluate_solution", "generate_channels", "parse_config",
    "serialize_config", "validate",
]
