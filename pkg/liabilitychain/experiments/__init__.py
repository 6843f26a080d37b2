"""Monte Carlo study and efficiency-loss construction."""

from .figure import render_figure
from .poa import calibrate_poa_technology, efficiency_loss, run_poa
from .simulation import COLUMNS, run_simulation

__all__ = [
    "COLUMNS",
    "calibrate_poa_technology",
    "efficiency_loss",
    "render_figure",
    "run_poa",
    "run_simulation",
]
