from pathlib import Path
from typing import List, Optional
import json
import logging

import click

from app.commands.common import output_dir, parse_weights, prepare_scenario, run_options
from app.errors import NonConverged
from app.models.report import SolveStatus
from app.services.fairness_services import FairnessService
from app.services.scenario_services import ScenarioService
from app.services.weighted_sum_services import WeightedSumService

logger = logging.getLogger(__name__)


def _persist(s, out: Path, traj, sched, report) -> None:
    ScenarioService.save_results(report, traj, sched, out)
    ScenarioService.save_scenario(s, out / 'scenario.json')
    click.echo(json.dumps(report.summary(), indent=2, sort_keys=True))


@click.command('optimize-wsb')
@run_options
@click.option('--weights', callback=parse_weights, default=None, help='Comma-separated per-IRS weights.')
def optimize_wsb(scenario_path: Optional[Path], out: Optional[Path], seed: Optional[int], coarse: bool,
                 weights: Optional[List[float]]):
    """
    Maximise the weighted IRS utility (relaxation-based alternating design).

    Writes trajectory.csv, schedule.csv, trace.csv, summary.json and timing.json.
    """
    s = prepare_scenario(scenario_path, seed, coarse, weights)
    traj, sched, _, report = WeightedSumService.run_weighted_sum(s)
    _persist(s, output_dir(out), traj, sched, report)


@click.command('optimize-fair')
@run_options
@click.option('--weights', callback=parse_weights, default=None, help='Comma-separated per-IRS weights.')
def optimize_fair(scenario_path: Optional[Path], out: Optional[Path], seed: Optional[int], coarse: bool,
                  weights: Optional[List[float]]):
    """
    Maximise the minimum IRS utility (penalty-based design).

    Also writes outer.csv with the penalty coefficient and violation per outer iteration.
    """
    s = prepare_scenario(scenario_path, seed, coarse, weights)
    traj, sched, _, report = FairnessService.run_fairness(s)
    _persist(s, output_dir(out), traj, sched, report)
    if report.status == SolveStatus.NON_CONVERGED:
        final_xi = report.outer_trace[-1].xi if report.outer_trace else float('nan')
        raise NonConverged(f"penalty method stopped at xi={final_xi:.3e} above eps2={s.algo.eps2:.1e}")


__all__ = ['optimize_wsb', 'optimize_fair']
