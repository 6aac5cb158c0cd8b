"""Study harness: configuration, scaling fits, studies and the command line."""

from .config import KINDS, StudyConfig, load_config, parse_config
from .fit import SlopeFit, fit_slope
from .studies import StudyResult, run_study

__all__ = ["KINDS", "SlopeFit", "StudyConfig", "StudyResult", "fit_slope", "load_config", "parse_config", "run_study"]
