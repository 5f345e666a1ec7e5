import numpy as np
import pytest

from config import Config
from relaynet import create_app
from relaynet.channel import ChannelParams, Deployment, reference_layout


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


class TestingConfig(Config):
    TESTING = True
    SEED = 0
    STEPS = 10
    TRAIN_DEPLOYMENTS = 2
    TEST_DEPLOYMENTS = 3
    MFL_EPOCHS = 2
    GL_EPOCHS = 2
    SYNTH_SAMPLES = 20
    SYNTH_EPOCHS = 1
    SYNTH_TEST_SAMPLES = 5
    PPO_SEGMENT_STEPS = 5
    PPO_RESETS = 2
    PPO_INNER_EPOCHS = 1
    PPO_MAX_EPOCHS = 2
    PPO_BATCH_SIZE = 5
    RL_BASELINE_EPOCHS = 1


@pytest.fixture
def app(tmp_path):
    class _Config(TestingConfig):
        LOG_DIR = str(tmp_path / "logs")

    return create_app(_Config)


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def params():
    return ChannelParams()


@pytest.fixture
def layout():
    return reference_layout()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_deployment(rng, n=6, spread=4.0):
    """Relays scattered around the axis with a jammer off to the side, kept apart from each other."""
    while True:
        positions = rng.uniform(-spread, spread, size=(n, 2))
        jammer = rng.uniform(-spread, spread, size=2)
        d = np.linalg.norm(positions[:, None] - positions[None, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() > 0.3 and np.linalg.norm(positions - jammer, axis=1).min() > 0.3:
            return Deployment(positions, jammer)
