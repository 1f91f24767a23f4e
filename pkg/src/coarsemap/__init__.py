"""Coarse-geometric analysis of decay functions on finite site sets."""
__version__ = "0.1.0"

from . import coarse, decay, io, spin
from .errors import CoarseMapError

__all__ = ["CoarseMapError", "coarse", "decay", "io", "spin", "__version__"]
