"""collarplots: figure frontend for collarlab sweep exports.

Consumes only the laboratory's documented CSV/JSON files; nothing here
recomputes a measured quantity.
"""

from .render import KINDS, PlotError, PlotJob, RenderInfo, render
from .schema import CURVE_COLUMNS, SWEEP_COLUMNS, SchemaMismatch, read_summary, read_table

__version__ = "0.1.0"

__all__ = [
    "CURVE_COLUMNS",
    "KINDS",
    "PlotError",
    "PlotJob",
    "RenderInfo",
    "SWEEP_COLUMNS",
    "SchemaMismatch",
    "read_summary",
    "read_table",
    "render",
    "__version__",
]
