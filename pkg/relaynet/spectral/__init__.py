from relaynet.spectral.eigen import jacobi_eigh  # noqa: F401
from relaynet.spectral.laplacian import (  # noqa: F401
    WeightedLaplacian,
    endpoint_weights,
    lambda2,
    lambda2_grad,
    unit_directions,
    wcc_step,
    weighted_laplacian,
)
