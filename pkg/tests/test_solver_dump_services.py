import numpy as np

from app.config import runner_config
from app.models.solver import QuadraticProgram
from app.services.quadratic_program_services import QuadraticProgramSolver
from app.services.solver_dump_services import SolverDumpService


def test_disabled_by_default(monkeypatch, tmp_path):
    monkeypatch.setattr(runner_config, 'debug_dump', False)
    monkeypatch.setattr(runner_config, 'dump_dir', str(tmp_path))
    assert SolverDumpService.dump_problem('lp', {'c': np.ones(2)}) is None
    assert list(tmp_path.iterdir()) == []


def test_forced_dump(monkeypatch, tmp_path):
    monkeypatch.setattr(runner_config, 'dump_dir', str(tmp_path))
    target = SolverDumpService.dump_problem('toy', {'A': np.eye(2), 'skip': None}, force=True)
    assert target.parent == tmp_path
    np.testing.assert_array_equal(np.loadtxt(target / 'A.csv', delimiter=','), np.eye(2))
    assert not (target / 'skip.csv').exists()


def test_solver_dumps_when_enabled(monkeypatch, tmp_path):
    monkeypatch.setattr(runner_config, 'debug_dump', True)
    monkeypatch.setattr(runner_config, 'dump_dir', str(tmp_path))
    QuadraticProgramSolver.solve_qp_linear(QuadraticProgram(Q=np.ones(2), c=[-1.0, 0.5], lb=np.zeros(2)))
    dumps = [p for p in tmp_path.iterdir() if p.name.startswith('qp_')]
    assert len(dumps) == 1
    assert (dumps[0] / 'Q.csv').is_file()
