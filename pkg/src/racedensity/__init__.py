"""Limiting densities and exceedance probabilities for prime number races.

The package computes, from tables of Riemann and Dirichlet zeros, the
logarithmic density of the set where one prime-counting contestant leads
another, through three independent numerical routes that check each other:
a Fourier/Poisson summation with controlled remainder, a third-order
steepest descent, and a direct convolution of single-zero densities.
"""

__version__ = "0.1.0"
