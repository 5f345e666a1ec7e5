from relaynet.datagen.env import RelayEnv  # noqa: F401
from relaynet.datagen.ppo import (  # noqa: F401
    BufferEntry,
    PpoConfig,
    PpoResult,
    clip,
    gaussian_log_density,
    ppo_rollout_epoch,
    ppo_update,
    reward_converged,
    train_ppo,
)
from relaynet.datagen.dataset import (  # noqa: F401
    STRATEGIES,
    TrajectorySample,
    audit_labels,
    generate_dataset,
    read_dataset,
    walk,
)
