from typing import Callable, List, Optional
from pathlib import Path
import logging

import click

from app.config import runner_config
from app.models.scenario import Scenario
from app.services.scenario_services import ScenarioService

logger = logging.getLogger(__name__)


def parse_weights(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[List[float]]:
    """Comma-separated per-IRS weights, e.g. 1,1,0.5,1,1"""
    if value is None:
        return None
    try:
        return [float(part) for part in value.split(',') if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def run_options(command: Callable) -> Callable:
    """Options shared by every subcommand"""
    command = click.option('--coarse', is_flag=True, help='One-second slots (N = T) for desk-scale runs.')(command)
    command = click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None,
                           help='Root seed; overrides the scenario rng_seed.')(command)
    command = click.option('--out', type=click.Path(file_okay=False, path_type=Path), default=None,
                           help='Output directory (default: IRS_OUTPUT_DIR).')(command)
    command = click.option('--scenario', 'scenario_path', type=click.Path(dir_okay=False, path_type=Path),
                           default=None, help='Scenario JSON file (default: built-in reference scenario).')(command)
    return command


def prepare_scenario(
    scenario_path: Optional[Path],
    seed: Optional[int],
    coarse: bool,
    weights: Optional[List[float]] = None,
) -> Scenario:
    """Load the scenario and apply the command-line overrides"""
    s = ScenarioService.load_scenario(scenario_path) if scenario_path else ScenarioService.default_scenario()
    overrides = {}
    if seed is not None:
        overrides['rng_seed'] = seed
    if weights is not None:
        overrides['weights'] = tuple(weights)
    if overrides:
        s = ScenarioService.with_overrides(s, **overrides)
    if coarse:
        s = ScenarioService.coarse(s)
    ScenarioService.check_slot_length(s)
    logger.info(f"Scenario '{s.name}': K={s.K}, N={s.N}, M={s.M}, seed={s.rng_seed}")
    return s


def output_dir(out: Optional[Path]) -> Path:
    return out if out is not None else Path(runner_config.output_dir)


__all__ = ['parse_weights', 'run_options', 'prepare_scenario', 'output_dir']
