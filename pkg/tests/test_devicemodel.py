"""Configuration types, unit handling, heater map, detection chain."""

import dataclasses
import math

import numpy as np
import pytest

from ringlab.devicemodel import (
    CouplingParams,
    DetectionChain,
    DeviceConfig,
    HeaterModel,
    db_loss_to_efficiency,
    default_config,
    detection_efficiency,
    heater_detuning,
    load_config,
    parse_config,
    pump_angular_frequency,
    validate_config,
)
from ringlab.errors import ConfigError

MHZ = 2.0 * math.pi * 1e6


def make_config(**overrides) -> DeviceConfig:
    base = default_config()
    fields = {f.name: getattr(base, f.name) for f in dataclasses.fields(DeviceConfig)}
    fields.update(overrides)
    return DeviceConfig(**fields)


# --- validation ---------------------------------------------------------------


def test_default_config_is_valid():
    cfg = default_config()
    assert validate_config(cfg) is cfg


def test_zero_intrinsic_loss_rejected():
    bad_ring = dataclasses.replace(default_config().ring1, gamma_i=0.0)
    with pytest.raises(ConfigError, match="ring1.gamma_i: intrinsic loss must be positive"):
        validate_config(make_config(ring1=bad_ring))


def test_stage_efficiency_above_one_rejected():
    chain = DetectionChain(stages=(("grating", 0.85), ("lens", 1.2)))
    with pytest.raises(ConfigError, match="detection.lens"):
        validate_config(make_config(detection=chain))


def test_nonpositive_rates_rejected():
    with pytest.raises(ConfigError, match="coupling.kappa_12"):
        validate_config(make_config(coupling=CouplingParams(kappa_ext=1e6, kappa_12=0.0)))
    with pytest.raises(ConfigError, match="coupling.kappa_ext"):
        validate_config(make_config(coupling=CouplingParams(kappa_ext=-1e6, kappa_12=1e6)))


def test_validation_is_idempotent():
    validated = validate_config(make_config())
    assert validate_config(validated) is validated


# --- heater map ---------------------------------------------------------------


def test_heater_zero_power_gives_zero_detuning():
    heater = HeaterModel(alpha=100.0 * MHZ, p_max_mw=50.0)
    assert heater_detuning(heater, 0.0) == 0.0


def test_heater_red_shift_sign_and_scale():
    heater = HeaterModel(alpha=100.0 * MHZ, p_max_mw=50.0)
    assert heater_detuning(heater, 1.0) == pytest.approx(-2.0 * math.pi * 100e6, rel=1e-15)


def test_heater_power_out_of_range():
    heater = HeaterModel(alpha=100.0 * MHZ, p_max_mw=50.0)
    with pytest.raises(ValueError):
        heater_detuning(heater, 51.0)
    with pytest.raises(ValueError):
        heater_detuning(heater, -0.1)


def test_heater_linearity():
    heater = HeaterModel(alpha=37.5 * MHZ, p_max_mw=100.0)
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = rng.uniform(0.0, 50.0)
        a = rng.uniform(0.0, 2.0)
        assert heater_detuning(heater, a * p) == pytest.approx(a * heater_detuning(heater, p), rel=1e-12, abs=1e-6)


# --- detection chain ----------------------------------------------------------


def test_detection_chain_device_budget():
    chain = DetectionChain(stages=(("grating", 0.85), ("lens", db_loss_to_efficiency(0.7)), ("qe", 0.80)))
    expected = 0.85 * 10.0 ** (-0.7 / 10.0) * 0.80
    assert detection_efficiency(chain) == pytest.approx(expected, abs=1e-15)
    assert detection_efficiency(chain) == pytest.approx(0.5787, abs=1e-4)


def test_detection_single_identity_stage():
    assert detection_efficiency(DetectionChain(stages=(("all", 1.0),))) == 1.0


def test_detection_product_definition():
    assert detection_efficiency(DetectionChain(stages=(("a", 0.5), ("b", 0.5)))) == pytest.approx(0.25)


def test_detection_order_invariance():
    rng = np.random.default_rng(3)
    for _ in range(100):
        effs = rng.uniform(0.05, 1.0, size=rng.integers(1, 7))
        stages = [(f"s{i}", float(e)) for i, e in enumerate(effs)]
        shuffled = list(stages)
        rng.shuffle(shuffled)
        a = detection_efficiency(DetectionChain(stages=tuple(stages)))
        b = detection_efficiency(DetectionChain(stages=tuple(shuffled)))
        assert a == pytest.approx(b, rel=1e-12)


# --- config file --------------------------------------------------------------

VALID_TEXT = """
[ring1]
radius_um = 115.0
omega0_offset_mhz = 750.0
gamma_i_mhz = 2.0
heater_alpha_mhz_per_mw = 30.0
heater_p_max_mw = 100.0

[ring2]
radius_um = 115.0
omega0_offset_mhz = 300.0
gamma_i_mhz = 2.0
heater_alpha_mhz_per_mw = 30.0
heater_p_max_mw = 100.0

[coupling]
kappa_ext_mhz = 5.0
kappa_12_mhz = 150.0

[detection]
grating = 0.85
lens_loss_db = 0.7
photodiode = 0.80

[pump]
wavelength_nm = 1561.1
"""


def test_shipped_config_matches_calibrated_default(device_cfg_path):
    assert load_config(device_cfg_path) == default_config()


def test_parse_valid_text_matches_default():
    assert validate_config(parse_config(VALID_TEXT)) == default_config()


def test_parse_units():
    cfg = parse_config(VALID_TEXT.replace("kappa_12_mhz = 150.0", "kappa_12_ghz = 0.15"))
    assert cfg.coupling.kappa_12 == pytest.approx(150.0 * MHZ, rel=1e-12)
    cfg = parse_config(VALID_TEXT.replace("gamma_i_mhz = 2.0", "gamma_i_rad_s = 12566370.614359172"))
    assert cfg.ring1.gamma_i == pytest.approx(2.0 * MHZ, rel=1e-12)


def test_parse_absolute_omega0():
    omega = pump_angular_frequency(1561.1) + 750.0 * MHZ
    text = VALID_TEXT.replace("omega0_offset_mhz = 750.0", f"omega0_rad_s = {omega!r}", 1)
    cfg = parse_config(text)
    assert cfg.ring1.omega0 == pytest.approx(omega, rel=1e-15)


def test_parse_error_names_bad_number():
    with pytest.raises(ConfigError, match=r"ring1\.gamma_i_mhz"):
        parse_config(VALID_TEXT.replace("gamma_i_mhz = 2.0", "gamma_i_mhz = abc", 1))


def test_parse_error_names_unknown_key():
    text = VALID_TEXT.replace("kappa_12_mhz = 150.0", "kappa_12_mhz = 150.0\nkappa_bogus_mhz = 1")
    with pytest.raises(ConfigError, match=r"coupling\.kappa_bogus_mhz"):
        parse_config(text)


def test_parse_error_names_missing_key():
    with pytest.raises(ConfigError, match=r"ring2\.radius_um"):
        parse_config(VALID_TEXT.replace("[ring2]\nradius_um = 115.0", "[ring2]"))


def test_parse_rejects_both_omega0_forms():
    text = VALID_TEXT.replace(
        "omega0_offset_mhz = 750.0", "omega0_offset_mhz = 750.0\nomega0_rad_s = 1e15", 1
    )
    with pytest.raises(ConfigError, match="omega0"):
        parse_config(text)


def test_parse_lens_loss_db_conversion():
    cfg = parse_config(VALID_TEXT)
    stages = dict(cfg.detection.stages)
    assert stages["lens"] == pytest.approx(10 ** (-0.07), rel=1e-12)


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="config file"):
        load_config("/nonexistent/path.cfg")


def test_parse_error_names_unknown_section():
    with pytest.raises(ConfigError, match="mystery"):
        parse_config(VALID_TEXT + "\n[mystery]\nx = 1\n")
