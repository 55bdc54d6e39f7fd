"""Min-plus products, Exact Triangle reductions and their brute-force oracles."""
from .core import MaskedMatrix, TriangleFlags, TriangleInstance, exact_triangle_brute, min_plus_brute

__version__ = "0.1.0"
__all__ = ["MaskedMatrix", "TriangleFlags", "TriangleInstance", "exact_triangle_brute", "min_plus_brute"]
