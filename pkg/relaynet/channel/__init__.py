from relaynet.channel.model import (  # noqa: F401
    ChannelParams,
    Deployment,
    adjacency,
    adjacency_grad,
    adjacency_jacobian,
    capacity,
    nu,
    nu_prime,
    reference_layout,
    sir,
)
