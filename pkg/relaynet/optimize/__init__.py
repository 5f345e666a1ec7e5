from relaynet.optimize.steps import (  # noqa: F401
    METHODS,
    clamp_relays,
    flow_value,
    gl_step,
    hybrid_step,
    mfl_gradient,
    mfl_step,
    rl_step,
)
from relaynet.optimize.trajectory import (  # noqa: F401
    Trajectory,
    optimize_deployments,
    read_trajectories,
    run_trajectory,
    write_trajectories,
)
