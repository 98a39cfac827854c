"""Figure rendering for ttlroute experiment CSVs."""

from .render import KINDS, CsvShapeError, PlotSpec, render

__all__ = ["KINDS", "CsvShapeError", "PlotSpec", "render"]

__version__ = "0.1.0"
