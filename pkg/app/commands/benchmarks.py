from pathlib import Path
from typing import Optional, Tuple
import logging

import click

from app.commands.common import output_dir, prepare_scenario, run_options
from app.services.benchmark_services import SCHEMES, BenchmarkService

logger = logging.getLogger(__name__)


@click.command('benchmarks')
@run_options
@click.option('--sweep', 'axis', type=click.Choice(['T', 'M']), default=None, help='Sweep the period or the element count.')
@click.option('--scheme', 'schemes', type=click.Choice(list(SCHEMES)), multiple=True,
              help='Restrict to these schemes (repeatable).')
def benchmarks(scenario_path: Optional[Path], out: Optional[Path], seed: Optional[int], coarse: bool,
               axis: Optional[str], schemes: Tuple[str, ...]):
    """Compare the proposed designs with the circular, fixed-phase and upper-bound schemes."""
    s = prepare_scenario(scenario_path, seed, coarse)
    chosen = list(schemes) or None
    if axis is None:
        rows = BenchmarkService.compare_schemes(s, chosen)
    else:
        rows = BenchmarkService.sweep(s, axis, schemes=chosen)

    path = BenchmarkService.write_comparison(rows, output_dir(out) / 'comparison.csv')
    for row in rows:
        point = '' if row.sweep is None else f"{row.sweep}={row.value:g} "
        click.echo(f"{point}{row.objective:<5} {row.scheme:<20} {row.utility:.6f}")
    logger.info(f"Comparison written to {path}")


__all__ = ['benchmarks']
