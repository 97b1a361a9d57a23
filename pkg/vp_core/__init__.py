"""
VP Sphere Core

Vanishing point detection on the Gaussian sphere: Hough voting, great-circle mapping,
clustering, evaluation and synthetic data.
"""

__version__ = "0.1.0"
