from relaynet.nn.tensor import Gradients, Tape, Tensor, as_tensor, grad_wrt_inputs  # noqa: F401
from relaynet.nn.optim import AdamState, adam_step  # noqa: F401
from relaynet.nn.init import init_uniform  # noqa: F401
from relaynet.nn import functional, losses  # noqa: F401
