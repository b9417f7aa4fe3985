"""Link-level simulation and channel estimation for full-duplex multi-tag
ambient-backscatter systems with TX/RX I/Q imbalance.

Public surface: configuration (:mod:`ambciq.config`), channel and signal
models (:mod:`ambciq.channels`, :mod:`ambciq.synthesis`), pilot design
(:mod:`ambciq.pilots`), the three estimators (:mod:`ambciq.pilot_estimator`,
:mod:`ambciq.amdd`, :mod:`ambciq.ecm`), error bounds (:mod:`ambciq.crb`)
and the Monte-Carlo harness (:mod:`ambciq.harness`).
"""

from .config import ConfigError, SystemConfig, load_config
from .channels import (EffectiveChannels, IQParams, PhysicalChannels,
                       derive_effective, pack_theta, pathloss, sample_channels,
                       theta_length, unpack_theta)
from .pilots import PilotCapacityError, PilotPlan, build_pilot_plan
from .pilot_estimator import EstimateSet, genie_estimate, pilot_estimate
from .amdd import amdd_estimate
from .ecm import ecm_estimate
from .crb import pilot_crb, semiblind_crb
from .errors import NumericalError

__all__ = [
    "ConfigError", "SystemConfig", "load_config",
    "EffectiveChannels", "IQParams", "PhysicalChannels",
    "derive_effective", "pack_theta", "pathloss", "sample_channels",
    "theta_length", "unpack_theta",
    "PilotCapacityError", "PilotPlan", "build_pilot_plan",
    "EstimateSet", "genie_estimate", "pilot_estimate",
    "amdd_estimate", "ecm_estimate",
    "pilot_crb", "semiblind_crb", "NumericalError",
]

__version__ = "0.1.0"
