"""Exact construction and verification of multi-indexed orthogonal polynomials."""
