import functools
import logging

import click

from relaynet.errors import IO_EXIT_CODE, RelaynetError

logger = logging.getLogger(__name__)


def exit_on_error(f):
    """Turn library failures raised inside a CLI command into structured exit codes."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return f(*args, **kwargs)
        except RelaynetError as e:
            logger.error(f"{ctx.command_path}: {type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        except OSError as e:
            logger.error(f"{ctx.command_path}: I/O failure: {e}")
            click.echo(f"error: {e}", err=True)
            ctx.exit(IO_EXIT_CODE)

    return wrapper
