"""Joint pilot (SRS) allocation and user scheduling for a single-cell Massive MIMO downlink."""

__version__ = "0.1.0"

from .engine import RunMetrics, SimConfig, SimResult, run_simulation, run_sweep  # noqa: E402
from .errors import ConfigError  # noqa: E402

__all__ = ["ConfigError", "RunMetrics", "SimConfig", "SimResult", "run_simulation", "run_sweep",
           "__version__"]
