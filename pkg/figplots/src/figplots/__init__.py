"""Figure rendering for flockcert CSV outputs."""

from .render import FIGURE_PRESETS, FigureSpec, SchemaError, load_table, render

__version__ = "0.1.0"
