from typing import Dict, Optional
from pathlib import Path
import logging

import numpy as np
import scipy.sparse as sp

from app.config import runner_config

logger = logging.getLogger(__name__)


class SolverDumpService:
    """Optional CSV dump of solver inputs for external cross-checking (IRS_DEBUG_DUMP)"""

    _counter = 0

    @staticmethod
    def dump_problem(name: str, matrices: Dict[str, Optional[np.ndarray]], force: bool = False) -> Optional[Path]:
        """
        Write each matrix of a problem to <dump_dir>/<name>_<seq>/<key>.csv.

        Args:
            name: Problem label
            matrices: Arrays to write; None entries are skipped
            force: Dump even when IRS_DEBUG_DUMP is off

        Returns:
            Optional[Path]: Directory written, or None when dumping is disabled
        """
        if not (force or runner_config.debug_dump):
            return None

        SolverDumpService._counter += 1
        target = Path(runner_config.dump_dir) / f"{name}_{SolverDumpService._counter:05d}"
        try:
            target.mkdir(parents=True, exist_ok=True)
            for key, value in matrices.items():
                if value is None:
                    continue
                if sp.issparse(value):
                    value = value.toarray()
                np.savetxt(target / f"{key}.csv", np.atleast_2d(np.asarray(value, dtype=float)), delimiter=',', fmt='%.17g')
        except OSError as e:
            logger.warning(f"Could not dump {name} to {target}: {e}")
            return None

        logger.debug(f"Dumped {name} matrices to {target}")
        return target


__all__ = ['SolverDumpService']
