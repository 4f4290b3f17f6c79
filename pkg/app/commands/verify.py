from pathlib import Path
from typing import Optional
import logging

import click

from app.commands.common import output_dir, prepare_scenario, run_options
from app.services.verification_services import VerificationService

logger = logging.getLogger(__name__)


@click.command('verify')
@run_options
@click.option('--quick', is_flag=True, help='Smaller Monte-Carlo sample sizes.')
@click.pass_context
def verify(ctx: click.Context, scenario_path: Optional[Path], out: Optional[Path], seed: Optional[int],
           coarse: bool, quick: bool):
    """
    Run the Monte-Carlo oracle suites (phase coherence, Jensen bound, BER, channel moments).

    Exits with status 1 when any suite fails.
    """
    s = prepare_scenario(scenario_path, seed, coarse)
    report = VerificationService.run_all(s, s.rng_seed, quick=quick)
    VerificationService.write_report(report, output_dir(out) / 'verify_report.json')

    for suite in report.suites:
        click.echo(f"{suite.name:<18} {'PASS' if suite.passed else 'FAIL'}  worst={suite.worst:.4g}  cases={suite.cases}")
    if not report.passed:
        ctx.exit(1)


__all__ = ['verify']
