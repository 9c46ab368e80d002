"""Fourier-Bessel and Hankel square functions: Riesz means, Stein square
functions, spectral multipliers and the experiments that probe their L^p
behaviour."""

__version__ = "0.1.0"
