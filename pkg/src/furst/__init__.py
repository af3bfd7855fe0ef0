"""Random matrix products on SL2(R), their stationary measures on the projective line, and dimension estimates."""

__version__ = "0.1.0"
