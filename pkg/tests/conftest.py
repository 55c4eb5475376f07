import numpy as np
import pytest

from app.core.config import settings
from app.schemas.channel import ChannelParams
from app.schemas.experiment import ExperimentConfig
from app.services.constellation import cached_constellation
from app.services.ldpc import load_small_code
from app.utils.experiment_logger import experiment_logger

TOY_CODE = "toy_12_6.txt"
IDENTITY_CROSSTALK = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


@pytest.fixture(autouse=True)
def isolated_output(tmp_path, monkeypatch):
    """Event log and results go to a per-test directory"""
    monkeypatch.setattr(settings, "RESULTS_DIR", str(tmp_path / "results"))
    monkeypatch.setattr(settings, "EXPERIMENT_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setattr(experiment_logger, "log_dir", tmp_path / "logs")
    yield
    experiment_logger.close()


@pytest.fixture(scope="session")
def constellation():
    return cached_constellation(512, 100)


@pytest.fixture(scope="session")
def toy_code():
    return load_small_code(TOY_CODE)


@pytest.fixture
def identity_channel():
    return ChannelParams.identity(led_count=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_config(tmp_path):
    """Factory for 16-CSK sweeps small enough to train in seconds"""
    def build(**overrides) -> ExperimentConfig:
        data = {
            "constellation": {"order": 16, "steps": 100},
            "led_counts": [4, 16],
            "equalizer": {"n_units": [16], "n_hidden": [1, 2]},
            "training": {"sample_count": 800, "epochs": 30, "learning_rate": 0.01},
            "uncoded_bit_budget": 4000,
            "coded": {"small_code_path": TOY_CODE, "blocks_per_point": 4,
                      "arch": {"n_units": 16, "n_hidden": 2}},
            "output": {"directory": str(tmp_path / "out")},
            "seed": 7,
        }
        data.update(overrides)
        return ExperimentConfig(**data)
    return build


@pytest.fixture
def clean_channel():
    """Channel settings with every impairment switched off"""
    return {"crosstalk": IDENTITY_CROSSTALK, "nonlinearity_gamma": 1.0, "noise_sigma0": 0.0}
