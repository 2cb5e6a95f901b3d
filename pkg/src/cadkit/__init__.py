"""cadkit: sketch-extrude CAD pipeline — DSL, geometry, graphs, datasets, metrics."""

from .errors import CadkitError

__version__ = "0.1.0"

__all__ = ["CadkitError", "__version__"]
