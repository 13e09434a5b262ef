"""Exact calculus of tautological classes on moduli spaces of stable curves.

Subpackages cover truncated exact power series, stable graphs, the strata
algebra with its excess-intersection product and push-forwards, descendent
integrals, the two hypergeometric relation generators, double ramification
cycles, and exact rational linear algebra.  Everything is computed over the
rationals; there is no floating-point path anywhere.
"""

__version__ = "0.1.0"
