"""Crossing fit, Lorentzian dip fit, linear fit, engine behavior."""

import math

import numpy as np
import pytest

from ringlab.errors import FitError
from ringlab.fitters import (
    CROSSING_PARAMS,
    CrossingDataset,
    fit_avoided_crossing,
    fit_lorentzian_dip,
    weighted_linear_fit,
)
from ringlab.spectra import TransmissionTrace

MHZ = 2.0 * math.pi * 1e6
PUMP = 1.2066e15

TRUTH = {
    "kappa_12": 150.0 * MHZ,
    "omega1_0": PUMP + 750.0 * MHZ,
    "omega2_0": PUMP + 300.0 * MHZ,
    "alpha1": 30.0 * MHZ,
    "alpha2": 30.0 * MHZ,
}


def synthetic_crossing(noise_sigma=0.0, seed=0, n_p1=15, p2_values=(8.0, 12.0)):
    """Both-branch resonance data from the two-oscillator eigenfrequency formula."""
    rng = np.random.default_rng(seed)
    p1 = np.tile(np.linspace(5.0, 55.0, n_p1), 2)
    p2 = np.tile([p2_values[i % len(p2_values)] for i in range(n_p1)], 2)
    sign = np.repeat([1.0, -1.0], n_p1)
    w1 = TRUTH["omega1_0"] - TRUTH["alpha1"] * p1
    w2 = TRUTH["omega2_0"] - TRUTH["alpha2"] * p2
    res = 0.5 * (w1 + w2) + sign * np.sqrt((0.5 * (w1 - w2)) ** 2 + TRUTH["kappa_12"] ** 2)
    if noise_sigma > 0:
        res = res + noise_sigma * TRUTH["kappa_12"] * rng.standard_normal(res.size)
    return CrossingDataset(
        p1_mw=p1,
        p2_mw=p2,
        branch=tuple("upper" if s > 0 else "lower" for s in sign),
        resonance_rad_s=res,
    )


# --- crossing fit ------------------------------------------------------------------


def test_zero_noise_recovery():
    result = fit_avoided_crossing(synthetic_crossing())
    assert result.converged
    for name in CROSSING_PARAMS:
        assert result.params[name] == pytest.approx(TRUTH[name], rel=1e-8)


def test_noisy_recovery_within_stderr():
    result = fit_avoided_crossing(synthetic_crossing(noise_sigma=0.01, seed=42))
    kappa = result.params["kappa_12"]
    assert abs(kappa - TRUTH["kappa_12"]) <= 3.0 * result.stderr["kappa_12"]
    assert result.stderr["kappa_12"] > 0


def test_stderr_calibrated_against_monte_carlo():
    estimates, stderrs = [], []
    for seed in range(30):
        result = fit_avoided_crossing(synthetic_crossing(noise_sigma=0.01, seed=seed))
        estimates.append(result.params["kappa_12"])
        stderrs.append(result.stderr["kappa_12"])
    spread = float(np.std(estimates))
    typical = float(np.median(stderrs))
    assert 0.5 * spread <= typical <= 2.0 * spread


def test_symmetric_point_splitting_gives_kappa():
    # rows only at the crossing: half the splitting reads the coupling directly
    p1 = np.array([24.99, 25.0, 25.01, 24.99, 25.0, 25.01])
    p2 = np.full(6, 10.0)
    sign = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    w1 = TRUTH["omega1_0"] - TRUTH["alpha1"] * p1
    w2 = TRUTH["omega2_0"] - TRUTH["alpha2"] * p2
    res = 0.5 * (w1 + w2) + sign * np.sqrt((0.5 * (w1 - w2)) ** 2 + TRUTH["kappa_12"] ** 2)
    half_split = 0.5 * (res[1] - res[4])  # exactly at the symmetric point
    assert half_split == pytest.approx(TRUTH["kappa_12"], rel=1e-9)  # ulp-limited at 1.2e15 rad/s
    data = CrossingDataset(p1_mw=p1, p2_mw=p2, branch=("upper",) * 3 + ("lower",) * 3, resonance_rad_s=res)
    fixed = {name: TRUTH[name] for name in CROSSING_PARAMS if name != "kappa_12"}
    result = fit_avoided_crossing(data, initial={"kappa_12": 0.7 * TRUTH["kappa_12"]}, fixed=fixed)
    assert result.params["kappa_12"] == pytest.approx(half_split, rel=1e-9)


def test_frequency_shift_invariance():
    base = fit_avoided_crossing(synthetic_crossing())
    shift = 2.0 * math.pi * 5e9
    data = synthetic_crossing()
    shifted = CrossingDataset(
        p1_mw=data.p1_mw,
        p2_mw=data.p2_mw,
        branch=data.branch,
        resonance_rad_s=data.resonance_rad_s + shift,
    )
    moved = fit_avoided_crossing(shifted)
    assert moved.params["omega1_0"] - base.params["omega1_0"] == pytest.approx(shift, rel=1e-6)
    assert moved.params["omega2_0"] - base.params["omega2_0"] == pytest.approx(shift, rel=1e-6)
    for name in ("kappa_12", "alpha1", "alpha2"):
        assert moved.params[name] == pytest.approx(base.params[name], rel=1e-9)


def test_recovery_consistency_large_n_small_noise():
    # n = 100 rows, noise 1e-4 of the coupling: estimates pinned to truth
    data = synthetic_crossing(noise_sigma=1e-4, seed=4, n_p1=50)
    result = fit_avoided_crossing(data)
    for name in CROSSING_PARAMS:
        assert result.params[name] == pytest.approx(TRUTH[name], rel=1e-3)


def test_objective_descends_monotonically():
    result = fit_avoided_crossing(synthetic_crossing(noise_sigma=0.01, seed=9))
    trace = np.array(result.objective_trace)
    assert np.all(np.diff(trace) <= 0.0)
    assert result.n_iterations <= 200


def test_rank_deficient_dataset_reported():
    # constant p2 makes omega2_0 and alpha2 exactly degenerate
    data = synthetic_crossing(p2_values=(10.0,))
    with pytest.raises(FitError, match="rank-deficient"):
        fit_avoided_crossing(data)


def test_dataset_invariants():
    good = synthetic_crossing()
    with pytest.raises(ValueError, match="6 rows"):
        CrossingDataset(good.p1_mw[:5], good.p2_mw[:5], good.branch[:5], good.resonance_rad_s[:5])
    with pytest.raises(ValueError, match="branch"):
        CrossingDataset(good.p1_mw, good.p2_mw, ("upper",) * good.n_rows, good.resonance_rad_s)
    with pytest.raises(ValueError, match="distinct"):
        CrossingDataset(
            np.full(6, 10.0), good.p2_mw[:6], ("upper", "lower") * 3, good.resonance_rad_s[:6]
        )


def test_unknown_fixed_parameter_rejected():
    with pytest.raises(ValueError, match="unknown parameter"):
        fit_avoided_crossing(synthetic_crossing(), fixed={"bogus": 1.0})


# --- Lorentzian dip fit ---------------------------------------------------------------


def make_dip_trace(omega0=1.2066e15, t_min=0.2, fwhm=6.0 * MHZ, baseline=1.0,
                   n=801, span_fwhm=12.0, noise=0.0, seed=0, slope=0.0):
    omega = omega0 + np.linspace(-0.5, 0.5, n) * span_fwhm * fwhm
    depth = 1.0 - t_min
    t = baseline * (1.0 - depth / (1.0 + 4.0 * (omega - omega0) ** 2 / fwhm**2))
    t = t + slope * (omega - omega0) / (span_fwhm * fwhm)
    if noise > 0:
        t = t + noise * np.random.default_rng(seed).standard_normal(n)
    return TransmissionTrace(omega_grid=omega, t_power=np.clip(t, 0.0, 1.0))


def test_lorentzian_exact_round_trip():
    trace = make_dip_trace(t_min=0.2, fwhm=6.0 * MHZ, baseline=0.97)
    result = fit_lorentzian_dip(trace, (0, trace.omega_grid.size))
    assert result.converged
    assert result.omega0 == pytest.approx(1.2066e15, abs=1e-8 * 1.2066e15)
    assert result.t_min == pytest.approx(0.2, rel=1e-6)  # already baseline-normalized
    assert result.fwhm == pytest.approx(6.0 * MHZ, rel=1e-6)
    assert result.baseline == pytest.approx(0.97, rel=1e-8)
    assert not result.mismatch_warning


def test_lorentzian_noisy_tmin_within_002():
    for seed in range(100):
        trace = make_dip_trace(noise=0.01, seed=seed)
        result = fit_lorentzian_dip(trace, (0, trace.omega_grid.size))
        assert abs(result.t_min - 0.2) <= 0.02


def test_lorentzian_sloped_baseline_flags_mismatch():
    trace = make_dip_trace(slope=0.05)
    result = fit_lorentzian_dip(trace, (0, trace.omega_grid.size))
    assert result.mismatch_warning


def test_lorentzian_rejects_window_without_dip():
    omega = 1.2066e15 + np.linspace(0, 1e8, 200)
    trace = TransmissionTrace(omega_grid=omega, t_power=np.full(200, 0.999))
    with pytest.raises(FitError, match="no dip"):
        fit_lorentzian_dip(trace, (0, 200))


def test_lorentzian_rejects_window_with_two_dips():
    omega = 1.2066e15 + np.linspace(-1e8, 1e8, 1001)
    dip = lambda c, w: 0.5 / (1.0 + 4.0 * (omega - c) ** 2 / w**2)
    t = 1.0 - dip(1.2066e15 - 4e7, 6e6) - dip(1.2066e15 + 4e7, 6e6)
    trace = TransmissionTrace(omega_grid=omega, t_power=t)
    with pytest.raises(FitError, match="multiple dips"):
        fit_lorentzian_dip(trace, (0, omega.size))


# --- linear fit --------------------------------------------------------------------------


def test_linear_exact():
    x = np.arange(1.0, 9.0)
    fit = weighted_linear_fit(x, 2.0 * x)
    assert fit.slope == pytest.approx(2.0, rel=1e-14)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-14)


def test_linear_through_origin_exact():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = weighted_linear_fit(x, 3.0 * x, through_origin=True)
    assert fit.slope == pytest.approx(3.0, rel=1e-14)
    assert fit.intercept == 0.0
    assert fit.r_squared == pytest.approx(1.0, abs=1e-14)


def test_linear_noisy_slope_within_stderr():
    rng = np.random.default_rng(77)
    x = np.linspace(0.0, 10.0, 50)
    y = x + 0.3 * rng.standard_normal(50)
    fit = weighted_linear_fit(x, y)
    assert fit.r_squared < 1.0
    assert abs(fit.slope - 1.0) <= 3.0 * fit.slope_stderr


def test_linear_degenerate_x_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        weighted_linear_fit([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
