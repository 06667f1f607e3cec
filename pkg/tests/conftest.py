from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def device_cfg_path() -> Path:
    return Path(__file__).resolve().parents[1] / "device.cfg"
