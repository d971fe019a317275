"""Figure rendering for ceitsim CSV outputs."""

__version__ = "0.1.0"

from .render import FIGURE_IDS, FigureSpec, SchemaError, Table, render
