import os

from dotenv import load_dotenv

basedir = os.path.abspath(os.path.dirname(__file__))
load_dotenv(os.path.join(basedir, ".env"))


def _point(value, default):
    if value is None:
        return default
    x, y = (float(v) for v in value.split(","))
    return (x, y)


def _points(value, default):
    if value is None:
        return default
    return tuple(_point(chunk, None) for chunk in value.split(";") if chunk.strip())


def _flag(value, default):
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


class Config:
    TESTING = False
    SEED = int(os.environ.get("SEED", 0))

    # Logging
    LOG_DIR = os.environ.get("LOG_DIR") or os.path.join(basedir, "logs")
    LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")

    # Channel model; see DESIGN.md for where the defaults come from
    CHANNEL_ALPHA = float(os.environ.get("CHANNEL_ALPHA", 2.0))
    CHANNEL_ETA = float(os.environ.get("CHANNEL_ETA", 2.0))
    CHANNEL_BANDWIDTH = float(os.environ.get("CHANNEL_BANDWIDTH", 1.0))
    CHANNEL_R_INT = float(os.environ.get("CHANNEL_R_INT", 1.0))
    CHANNEL_RHO = float(os.environ.get("CHANNEL_RHO", 1.0))
    CHANNEL_KAPPA = float(os.environ.get("CHANNEL_KAPPA", 10.0))
    CHANNEL_Z0 = float(os.environ.get("CHANNEL_Z0", 1e-3))
    CHANNEL_MIN_DISTANCE = float(os.environ.get("CHANNEL_MIN_DISTANCE", 1e-6))

    # Experiment arena, 1 unit = 50 m
    ARENA_HALF_WIDTH = float(os.environ.get("ARENA_HALF_WIDTH", 6.0))
    UNIT_METERS = float(os.environ.get("UNIT_METERS", 50.0))
    SOURCE_POSITION = _point(os.environ.get("SOURCE_POSITION"), (-4.5, 0.0))
    DEST_POSITION = _point(os.environ.get("DEST_POSITION"), (4.5, 0.0))
    RELAY_INIT = _points(
        os.environ.get("RELAY_INIT"),
        ((-2.7, 0.0), (-0.9, 0.0), (0.9, 0.0), (2.7, 0.0)),
    )
    GUARD_RADIUS = float(os.environ.get("GUARD_RADIUS", 3.0))
    STEP_SIZE = float(os.environ.get("STEP_SIZE", 0.02))
    STEPS = int(os.environ.get("STEPS", 400))
    SNAPSHOT_INTERVAL = int(os.environ.get("SNAPSHOT_INTERVAL", 5))
    CLAMP_TO_ARENA = _flag(os.environ.get("CLAMP_TO_ARENA"), True)
    MFL_UPDATE_MODE = os.environ.get("MFL_UPDATE_MODE", "vector")
    WCC_ENDPOINT_FACTOR = float(os.environ.get("WCC_ENDPOINT_FACTOR", 3.0))

    # Desk-scale defaults; full scale is 2000 / 500
    TRAIN_DEPLOYMENTS = int(os.environ.get("TRAIN_DEPLOYMENTS", 100))
    TEST_DEPLOYMENTS = int(os.environ.get("TEST_DEPLOYMENTS", 50))

    # PPO dataset generator. Desk scale: T = 40 x 5 per epoch, at most 50 epochs,
    # a few minutes on one core. Full scale is 400 segment steps and 1000 epochs.
    PPO_GAMMA = float(os.environ.get("PPO_GAMMA", 0.9))
    PPO_TAU = float(os.environ.get("PPO_TAU", 0.2))
    PPO_SEGMENT_STEPS = int(os.environ.get("PPO_SEGMENT_STEPS", 40))
    PPO_RESETS = int(os.environ.get("PPO_RESETS", 5))
    PPO_INNER_EPOCHS = int(os.environ.get("PPO_INNER_EPOCHS", 10))
    PPO_MAX_EPOCHS = int(os.environ.get("PPO_MAX_EPOCHS", 50))
    PPO_ACTOR_LR = float(os.environ.get("PPO_ACTOR_LR", 4e-4))
    PPO_CRITIC_LR = float(os.environ.get("PPO_CRITIC_LR", 1e-4))
    PPO_BATCH_SIZE = int(os.environ.get("PPO_BATCH_SIZE", 100))
    PPO_CONVERGENCE_WINDOW = int(os.environ.get("PPO_CONVERGENCE_WINDOW", 20))
    PPO_CONVERGENCE_TOL = float(os.environ.get("PPO_CONVERGENCE_TOL", 0.01))
    RL_BASELINE_EPOCHS = int(os.environ.get("RL_BASELINE_EPOCHS", 50))

    # Supervised training (full scale: 8000 / 5000 epochs)
    MFL_LR = float(os.environ.get("MFL_LR", 2e-4))
    MFL_EPOCHS = int(os.environ.get("MFL_EPOCHS", 200))
    GL_LR = float(os.environ.get("GL_LR", 2e-4))
    GL_EPOCHS = int(os.environ.get("GL_EPOCHS", 200))
    BATCH_SIZE = int(os.environ.get("BATCH_SIZE", 100))

    # Synthetic gradient-fidelity check (full scale: 30000 samples, 1000 epochs)
    SYNTH_LR = float(os.environ.get("SYNTH_LR", 2e-3))
    SYNTH_SAMPLES = int(os.environ.get("SYNTH_SAMPLES", 5000))
    SYNTH_EPOCHS = int(os.environ.get("SYNTH_EPOCHS", 200))
    SYNTH_TEST_SAMPLES = int(os.environ.get("SYNTH_TEST_SAMPLES", 500))

    # Reports
    HIST_BINS = int(os.environ.get("HIST_BINS", 20))
    TRUNCATE_FRACTION = float(os.environ.get("TRUNCATE_FRACTION", 0.1))
    FIDELITY_TRUNCATE_FRACTION = float(
        os.environ.get("FIDELITY_TRUNCATE_FRACTION", 0.01)
    )
    BASELINE = os.environ.get("BASELINE", "wcc")
