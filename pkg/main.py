from typing import List, Optional
import logging
import sys

import click
from dotenv import load_dotenv

# Import modules
from app.config import runner_config
from app.errors import ChannelError, OptimizationError, ScenarioError, SolverError
from app.commands.benchmarks import benchmarks
from app.commands.optimize import optimize_fair, optimize_wsb
from app.commands.scenario import show_scenario
from app.commands.verify import verify

# Load environment variables from .env file
load_dotenv()

# Configure logging
logging.basicConfig(**runner_config.get_logging_params())
logger = logging.getLogger(__name__)


@click.group()
def cli():
    """UAV-assisted IRS symbiotic radio: trajectory, scheduling and phase design."""


cli.add_command(optimize_wsb)
cli.add_command(optimize_fair)
cli.add_command(benchmarks)
cli.add_command(verify)
cli.add_command(show_scenario)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand and map its outcome to an exit code.

    Returns:
        int: 0 on success, 1 for usage, scenario, channel and optimization errors,
        2 for solver failures and anything unexpected
    """
    try:
        result = cli.main(args=argv, prog_name='irs-symbiotic', standalone_mode=False)
        # --help and ctx.exit() come back as their exit code
        return result if isinstance(result, int) else 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        click.echo('Aborted!', err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except (ScenarioError, ChannelError, OptimizationError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        click.echo(f"Error: {type(e).__name__}: {e}", err=True)
        return 1
    except SolverError as e:
        logger.error(f"Solver failure: {type(e).__name__}: {e}")
        click.echo(f"Internal solver failure: {type(e).__name__}: {e}", err=True)
        return 2
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        click.echo(f"Internal error: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
