"""Offline rendering of simulation trace CSV / summary JSON files into figures."""

from .render import PlotSpec, PlotError, build_figure, render

__all__ = ["PlotSpec", "PlotError", "build_figure", "render"]
__version__ = "0.1.0"
