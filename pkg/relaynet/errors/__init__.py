"""Exception hierarchy shared by every relaynet package.

Each class carries the exit status the CLI reports for it.
"""


class RelaynetError(Exception):
    exit_code = 1


class InputError(RelaynetError, ValueError):
    """Arguments violate an operation's preconditions."""

    exit_code = 3


class ShapeError(InputError):
    exit_code = 3


class SizeError(InputError):
    exit_code = 3


class DegenerateGeometryError(RelaynetError):
    """Two nodes (or a node and the jammer) sit closer than the distance guard."""

    exit_code = 4


class NonFiniteError(RelaynetError):
    exit_code = 5


class EigenConvergenceError(RelaynetError):
    exit_code = 5


class DegenerateEigenvalueError(RelaynetError):
    """lambda_2 is not simple, so its gradient is only a subgradient."""

    exit_code = 5


class CheckpointError(RelaynetError):
    exit_code = 6


class RecordError(RelaynetError):
    """Malformed line-delimited record file."""

    exit_code = 6


USAGE_EXIT_CODE = 2
IO_EXIT_CODE = 6

from relaynet.errors import handlers  # noqa: E402,F401
