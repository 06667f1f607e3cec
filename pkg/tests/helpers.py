"""Shared test utilities."""

import dataclasses

from ringlab.devicemodel import DeviceConfig, ValidatedConfig, validate_config


def replace_config(config: DeviceConfig, **overrides) -> ValidatedConfig:
    """Rebuild a config with some fields overridden, then validate it."""
    fields = {f.name: getattr(config, f.name) for f in dataclasses.fields(DeviceConfig)}
    fields.update(overrides)
    return validate_config(DeviceConfig(**fields))
