"""LG/CY correspondence toolkit for Fermat Borcea-Voisin orbifolds."""
from .weights import Curve, InvalidSpec, OrbifoldSpec

__all__ = ["Curve", "InvalidSpec", "OrbifoldSpec", "__version__"]
__version__ = "0.1.0"
