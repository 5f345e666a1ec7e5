from relaynet.flow.solver import (  # noqa: F401
    FlowResult,
    brute_force_min_cut,
    lipschitz_check,
    max_flow,
)
