"""eisenlab-plots: render decay/trace/counting figures from eisenlab CSV output."""

__version__ = "0.1.0"

from .render import FigureSpec, render  # noqa: F401
