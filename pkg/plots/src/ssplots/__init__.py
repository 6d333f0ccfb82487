"""Figure rendering for bench results and optimizer cost trajectories."""

from .reader import (
    CsvFormatError,
    below_equal_line_pct,
    read_results,
    read_trajectories,
)
from .render import KINDS, PlotJob, render

__version__ = "0.1.0"
