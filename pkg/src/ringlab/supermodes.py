"""Supermodes of the coupled two-ring system.

Diagonalizes the 2x2 Hermitian coupling matrix [[w1, k12], [k12, w2]] to get
the avoided-crossing branch frequencies

    w_pm = (w1 + w2)/2 +- sqrt(((w1 - w2)/2)**2 + k12**2)

and the normalized energy fractions |c1|^2, |c2|^2 of each branch in the two
rings.  Because only ring 1 touches the bus waveguide, a branch couples to
the bus in proportion to its ring-1 fraction, which is what makes the
coupling efficiency heater-tunable: on the lower branch the light migrates
from ring 2 (ring 1 blue of ring 2) to ring 1 (ring 1 red of ring 2) as the
ring-1 heater power increases.

Losses are not included in the eigenproblem; they enter perturbatively via
effective_rates, weighting each ring's rate by the branch's energy fraction
in that ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .devicemodel import ValidatedConfig, ring_frequency

BRANCH_UPPER = "upper"
BRANCH_LOWER = "lower"


@dataclass(frozen=True)
class SupermodeSolution:
    """One supermode branch at one heater setting.

    frac1/frac2 are the energy fractions in ring 1 / ring 2 (sum to 1);
    kappa_eff and gamma_eff are the branch's external and intrinsic energy
    decay rates; eta_c = kappa_eff/(kappa_eff + gamma_eff) is the coupling
    efficiency and tau_c = 1/(kappa_eff + gamma_eff) the photon lifetime.
    """

    branch: str
    omega: float
    frac1: float
    frac2: float
    kappa_eff: float
    gamma_eff: float
    eta_c: float
    tau_c: float


class SweepPoint(NamedTuple):
    p1_mw: float
    omega_rad_s: float
    eta_c: float
    tau_c_s: float


def _check_kappa(kappa_12: float) -> None:
    if not (kappa_12 > 0 and math.isfinite(kappa_12)):
        raise ValueError(f"inter-ring coupling must be positive, got {kappa_12}")


def supermode_frequencies(omega1: float, omega2: float, kappa_12: float) -> tuple[float, float]:
    """Branch eigenfrequencies (omega_plus, omega_minus) of the coupled pair."""
    _check_kappa(kappa_12)
    mean = 0.5 * (omega1 + omega2)
    half_split = math.hypot(0.5 * (omega1 - omega2), kappa_12)
    return mean + half_split, mean - half_split


def supermode_vectors(
    omega1: float, omega2: float, kappa_12: float
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Energy fractions ((frac1, frac2) upper, (frac1, frac2) lower).

    Eigenvectors of [[w1, k12], [k12, w2]]: the lower branch is
    proportional to (-k12, delta + R) with delta = (w1 - w2)/2 and
    R = sqrt(delta^2 + k12^2), so its ring-1 fraction goes to 1 for
    w1 << w2 and to 0 for w1 >> w2; the upper branch is the orthogonal
    complement.  delta + R is evaluated as k12^2/(R - delta) for
    delta < 0 to avoid cancellation.
    """
    _check_kappa(kappa_12)
    delta = 0.5 * (omega1 - omega2)
    radius = math.hypot(delta, kappa_12)
    t = kappa_12 * kappa_12 / (radius - delta) if delta < 0.0 else delta + radius
    k2 = kappa_12 * kappa_12
    t2 = t * t
    norm = k2 + t2
    frac1_lower = k2 / norm
    frac1_upper = t2 / norm
    return (frac1_upper, 1.0 - frac1_upper), (frac1_lower, 1.0 - frac1_lower)


def effective_rates(
    frac1: float, frac2: float, kappa_ext: float, gamma1: float, gamma2: float
) -> tuple[float, float, float, float]:
    """Branch rates (kappa_eff, gamma_eff, eta_c, tau_c) from ring fractions.

    Only ring 1 couples to the bus, so kappa_eff = frac1*kappa_ext; the
    intrinsic rate is the fraction-weighted average of the ring rates.
    """
    if abs(frac1 + frac2 - 1.0) > 1e-9 or frac1 < 0.0 or frac2 < 0.0:
        raise ValueError(f"fractions must be normalized and non-negative, got ({frac1}, {frac2})")
    if kappa_ext <= 0 or gamma1 <= 0 or gamma2 <= 0:
        raise ValueError("rates must be positive")
    kappa_eff = frac1 * kappa_ext
    gamma_eff = frac1 * gamma1 + frac2 * gamma2
    total = kappa_eff + gamma_eff
    return kappa_eff, gamma_eff, kappa_eff / total, 1.0 / total


def solve_branch(config: ValidatedConfig, p1_mw: float, p2_mw: float, branch: str) -> SupermodeSolution:
    """Full supermode solution for one branch at one heater setting."""
    if branch not in (BRANCH_UPPER, BRANCH_LOWER):
        raise ValueError(f"branch must be 'upper' or 'lower', got {branch!r}")
    omega1 = ring_frequency(config.ring1, p1_mw)
    omega2 = ring_frequency(config.ring2, p2_mw)
    kappa_12 = config.coupling.kappa_12
    omega_plus, omega_minus = supermode_frequencies(omega1, omega2, kappa_12)
    upper, lower = supermode_vectors(omega1, omega2, kappa_12)
    omega, (frac1, frac2) = (omega_plus, upper) if branch == BRANCH_UPPER else (omega_minus, lower)
    kappa_eff, gamma_eff, eta_c, tau_c = effective_rates(
        frac1, frac2, config.coupling.kappa_ext, config.ring1.gamma_i, config.ring2.gamma_i
    )
    return SupermodeSolution(
        branch=branch,
        omega=omega,
        frac1=frac1,
        frac2=frac2,
        kappa_eff=kappa_eff,
        gamma_eff=gamma_eff,
        eta_c=eta_c,
        tau_c=tau_c,
    )


def solve_both(config: ValidatedConfig, p1_mw: float, p2_mw: float) -> tuple[SupermodeSolution, SupermodeSolution]:
    """(upper, lower) supermode solutions at one heater setting."""
    return (
        solve_branch(config, p1_mw, p2_mw, BRANCH_UPPER),
        solve_branch(config, p1_mw, p2_mw, BRANCH_LOWER),
    )


def eta_c_vs_heater(
    config: ValidatedConfig, branch: str, p1_grid_mw, p2_mw: float
) -> list[SweepPoint]:
    """Coupling-efficiency sweep along one branch versus ring-1 heater power.

    Each grid point composes the heater map, the eigenproblem, and the
    effective rates; heater range errors propagate.
    """
    points = []
    for p1 in p1_grid_mw:
        sol = solve_branch(config, float(p1), p2_mw, branch)
        points.append(SweepPoint(float(p1), sol.omega, sol.eta_c, sol.tau_c))
    return points
