from .experiments import RunAblations, RunOracleSuite, RunSweep, RunTimeSeries, RunTruncationStudy
from .integrator import EvolutionConfig, Evolve
from .system_model import SystemParams

__all__ = [
    "EvolutionConfig",
    "Evolve",
    "RunAblations",
    "RunOracleSuite",
    "RunSweep",
    "RunTimeSeries",
    "RunTruncationStudy",
    "SystemParams",
]
