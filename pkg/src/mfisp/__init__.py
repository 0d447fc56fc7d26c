"""Multi-frequency inverse source reconstruction on a disc with a Fourier-Bessel basis."""

from ._backend import BACKEND
from .errors import (
    ConvergenceError,
    DomainError,
    MfispError,
    PlanError,
    SimulationError,
    SolveError,
    StageError,
    UsageError,
    VanishingSingularValueError,
)
from .fbbasis import FBExpansion, PolarGrid
from .forward import Measurement
from .freqplan import FrequencyPlan, build_plan
from .kmatrix import KMatrix
from .pipeline import ExperimentConfig, ReconstructionReport, run_reconstruction
from .sve import SingularSystem

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConvergenceError",
    "DomainError",
    "ExperimentConfig",
    "FBExpansion",
    "FrequencyPlan",
    "KMatrix",
    "Measurement",
    "MfispError",
    "PlanError",
    "PolarGrid",
    "ReconstructionReport",
    "SimulationError",
    "SingularSystem",
    "SolveError",
    "StageError",
    "UsageError",
    "VanishingSingularValueError",
    "build_plan",
    "run_reconstruction",
]
