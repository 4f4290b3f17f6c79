import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file before reading them
load_dotenv()

logger = logging.getLogger(__name__)

_TRUTHY = {'1', 'true', 'yes', 'on'}


def _flag(name: str) -> bool:
    return os.getenv(name, '').strip().lower() in _TRUTHY


class RunnerConfig:
    """Runner configuration from environment variables"""

    def __init__(self):
        self.log_level = os.getenv('LOG_LEVEL', 'INFO').strip().upper()
        if not isinstance(logging.getLevelName(self.log_level), int):
            raise ValueError(
                f"Unknown LOG_LEVEL '{self.log_level}'. "
                "Use one of DEBUG, INFO, WARNING, ERROR, CRITICAL."
            )

        # Seed used when neither the scenario file nor --seed provides one
        self.default_seed = int(os.getenv('IRS_DEFAULT_SEED', 7))
        if self.default_seed < 0:
            raise ValueError("IRS_DEFAULT_SEED must be a non-negative integer.")

        self.output_dir = os.getenv('IRS_OUTPUT_DIR', 'results')

        # Solver debugging switches
        self.debug_dump = _flag('IRS_DEBUG_DUMP')
        self.dump_dir = os.getenv('IRS_DUMP_DIR', 'debug_dumps')
        self.check_convexity = _flag('IRS_CHECK_CONVEXITY')

    def get_logging_params(self) -> dict:
        """Get logging.basicConfig parameters"""
        return {
            'level': logging.getLevelName(self.log_level),
            'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        }


# Global runner configuration
runner_config = RunnerConfig()

__all__ = ['RunnerConfig', 'runner_config']
