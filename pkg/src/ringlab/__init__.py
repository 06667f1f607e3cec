"""ringlab: simulator and analysis toolkit for thermally tunable coupled
double-ring optical parametric oscillators.

Subpackages: devicemodel (configuration and units), supermodes
(avoided-crossing eigenproblem and coupling efficiency), spectra (bus
transmission and dip extraction), squeezing (intensity-difference noise
spectrum), langevin (stochastic verification), fitters (least-squares
parameter estimation), cli (command-line front end).
"""

from .devicemodel import (
    CouplingParams,
    DetectionChain,
    DeviceConfig,
    HeaterModel,
    RingParams,
    ValidatedConfig,
    default_config,
    detection_efficiency,
    heater_detuning,
    load_config,
    validate_config,
)
from .errors import ConfigError, DataError, FitError
from .fitters import CrossingDataset, FitResult, fit_avoided_crossing, fit_lorentzian_dip, weighted_linear_fit
from .langevin import LangevinRun, NoiseSpectrum, analytic_psd, output_psd, simulate_difference_quadrature
from .spectra import TransmissionDip, TransmissionTrace, eta_c_from_tmin, find_dips, transmission
from .squeezing import SqueezingPoint, infer_onchip, squeezing_spectrum, squeezing_vs_coupling
from .supermodes import SupermodeSolution, effective_rates, eta_c_vs_heater, supermode_frequencies, supermode_vectors

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CouplingParams",
    "CrossingDataset",
    "DataError",
    "DetectionChain",
    "DeviceConfig",
    "FitError",
    "FitResult",
    "HeaterModel",
    "LangevinRun",
    "NoiseSpectrum",
    "RingParams",
    "SqueezingPoint",
    "SupermodeSolution",
    "TransmissionDip",
    "TransmissionTrace",
    "ValidatedConfig",
    "analytic_psd",
    "default_config",
    "detection_efficiency",
    "effective_rates",
    "eta_c_from_tmin",
    "eta_c_vs_heater",
    "find_dips",
    "fit_avoided_crossing",
    "fit_lorentzian_dip",
    "heater_detuning",
    "infer_onchip",
    "load_config",
    "output_psd",
    "simulate_difference_quadrature",
    "squeezing_spectrum",
    "squeezing_vs_coupling",
    "supermode_frequencies",
    "supermode_vectors",
    "transmission",
    "validate_config",
    "weighted_linear_fit",
]
