"""Exact-arithmetic homological calculus for small graded algebras.

Computes Hochschild, cyclic and Poisson (co)homology of desk-scale graded
algebras over the rationals, assembles differential calculi with duality,
derives Batalin-Vilkovisky operators, and builds the n-ary brackets on
truncated negative cyclic homology, verifying every algebraic identity
exactly (no floating point).
"""

__version__ = "0.1.0"
