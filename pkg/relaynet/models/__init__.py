from relaynet.models.architectures import (  # noqa: F401
    ARCHITECTURES,
    ActorModel,
    CriticModel,
    GlModel,
    GraphModel,
    MflModel,
    actor_forward,
    critic_forward,
    gl_forward,
    mfl_forward,
)
from relaynet.models.checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
from relaynet.models.features import build_features, graph_inputs, stack_inputs  # noqa: F401
