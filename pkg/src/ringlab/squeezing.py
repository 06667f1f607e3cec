"""Intensity-difference squeezing of the twin beams.

Above threshold the noise of the signal/idler intensity difference,
normalized to shot noise at sideband frequency W, is

    S(W) = 1 - eta_c * eta_d / (1 + W^2 tau_c^2)

with eta_c the coupling efficiency, eta_d the detection efficiency and
tau_c the cavity photon lifetime.  S < 1 (negative dB) means squeezing.
Inference of the on-chip level divides the observed noise reduction
1 - S by eta_d, which undoes exactly the detection factor and nothing
else (the Lorentzian cavity roll-off is exposed separately).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .devicemodel import ValidatedConfig, detection_efficiency
from .supermodes import eta_c_vs_heater

OMEGA_SIDEBAND_DEFAULT = 2.0 * math.pi * 3e6  # rad/s

KIND_MEASURED = "measured"
KIND_ONCHIP = "onchip"


@dataclass(frozen=True)
class SqueezingPoint:
    """Normalized intensity-difference noise at one sideband frequency."""

    omega_sideband: float
    eta_c: float
    eta_d: float
    tau_c: float
    s_linear: float
    s_db: float
    kind: str


def db_from_linear(s_linear: float) -> float:
    """Linear power ratio to dB (10*log10)."""
    if s_linear <= 0:
        raise ValueError(f"linear value must be positive, got {s_linear}")
    return 10.0 * math.log10(s_linear)


def linear_from_db(s_db: float) -> float:
    """dB to linear power ratio (inverse of db_from_linear)."""
    return 10.0 ** (s_db / 10.0)


def lorentzian_rolloff(omega_tau_product: float) -> float:
    """Cavity bandwidth factor 1/(1 + (W*tau_c)^2)."""
    return 1.0 / (1.0 + omega_tau_product * omega_tau_product)


def _check_efficiencies(eta_c: float, eta_d: float) -> None:
    if not 0.0 <= eta_c <= 1.0:
        raise ValueError(f"eta_c must be in [0, 1], got {eta_c}")
    if not 0.0 <= eta_d <= 1.0:
        raise ValueError(f"eta_d must be in [0, 1], got {eta_d}")


def squeezing_level(eta_c: float, eta_d: float, tau_c: float, omega_sideband: float) -> float:
    """Normalized noise S at a single sideband frequency (linear units)."""
    _check_efficiencies(eta_c, eta_d)
    if tau_c <= 0:
        raise ValueError(f"tau_c must be positive, got {tau_c}")
    return 1.0 - eta_c * eta_d * lorentzian_rolloff(omega_sideband * tau_c)


def squeezing_spectrum(eta_c: float, eta_d: float, tau_c: float, omega_grid) -> list[SqueezingPoint]:
    """Pointwise squeezing spectrum over a grid of sideband frequencies."""
    kind = KIND_ONCHIP if eta_d == 1.0 else KIND_MEASURED
    points = []
    for omega in omega_grid:
        s = squeezing_level(eta_c, eta_d, tau_c, float(omega))
        points.append(
            SqueezingPoint(
                omega_sideband=float(omega),
                eta_c=eta_c,
                eta_d=eta_d,
                tau_c=tau_c,
                s_linear=s,
                s_db=db_from_linear(s),
                kind=kind,
            )
        )
    return points


def infer_onchip(s_measured_linear: float, eta_d: float, omega_tau_product: float = 0.0) -> float:
    """On-chip squeezing inferred from a measured level by removing eta_d.

    Inverts the spectrum formula: the noise reduction 1 - S scales
    linearly with eta_d, so s_onchip = 1 - (1 - s_measured)/eta_d.  The
    measured value must exceed 1 - eta_d*L(W) (with L the cavity
    roll-off at the measurement sideband), else the implied coupling
    efficiency would be above 1.
    """
    if not 0.0 < eta_d <= 1.0:
        raise ValueError(f"eta_d must be in (0, 1], got {eta_d}")
    rolloff = lorentzian_rolloff(omega_tau_product)
    floor = 1.0 - eta_d * rolloff
    if not floor < s_measured_linear <= 1.0:
        raise ValueError(
            f"measured level {s_measured_linear} outside ({floor}, 1]: "
            "would imply a coupling efficiency above 1"
        )
    return 1.0 - (1.0 - s_measured_linear) / eta_d


class CouplingSweepPoint(NamedTuple):
    eta_c: float
    s_measured_db: float
    s_onchip_db: float
    omega_sideband_hz: float
    tau_c_s: float


def squeezing_vs_coupling(
    config: ValidatedConfig,
    branch: str,
    p1_grid_mw,
    p2_mw: float,
    omega_sideband: float = OMEGA_SIDEBAND_DEFAULT,
) -> list[CouplingSweepPoint]:
    """Measured and on-chip squeezing along a heater sweep of one branch.

    The measured column uses the config's composite detection efficiency,
    the on-chip column eta_d = 1; both levels fall (more squeezing) as the
    sweep raises eta_c, since the photon lifetime shortens together with
    the rising external coupling.
    """
    eta_d = detection_efficiency(config.detection)
    rows = []
    for point in eta_c_vs_heater(config, branch, p1_grid_mw, p2_mw):
        s_measured = squeezing_level(point.eta_c, eta_d, point.tau_c_s, omega_sideband)
        s_onchip = squeezing_level(point.eta_c, 1.0, point.tau_c_s, omega_sideband)
        rows.append(
            CouplingSweepPoint(
                eta_c=point.eta_c,
                s_measured_db=db_from_linear(s_measured),
                s_onchip_db=db_from_linear(s_onchip),
                omega_sideband_hz=omega_sideband / (2.0 * math.pi),
                tau_c_s=point.tau_c_s,
            )
        )
    return rows
