"""Machine-zero residual estimation for a 2D edge-based compressible-flow solver."""
__version__ = "0.1.0"
