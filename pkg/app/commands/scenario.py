from pathlib import Path
from typing import Optional
import json

import click

from app.commands.common import prepare_scenario, run_options
from app.services.scenario_services import ScenarioService


@click.command('show-scenario')
@run_options
def show_scenario(scenario_path: Optional[Path], out: Optional[Path], seed: Optional[int], coarse: bool):
    """Print the validated scenario in linear and dB units; with --out, also save it as scenario.json."""
    s = prepare_scenario(scenario_path, seed, coarse)
    click.echo(json.dumps(ScenarioService.describe(s), indent=2, sort_keys=True))
    if out is not None:
        ScenarioService.save_scenario(s, out / 'scenario.json')


__all__ = ['show_scenario']
