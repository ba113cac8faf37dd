"""Neighborhood complexes of Kneser-type graphs on a cyclic ground set.

The library builds three graph families on the ground set {1, ..., k+6}
(triples as vertices, disjointness as adjacency, with variants restricted
to "stable" triples), constructs their neighborhood complexes, builds
explicit discrete Morse matchings on two face families, verifies every
combinatorial property those matchings rely on, and cross-checks the
resulting homotopy claims against an exact integer Smith normal form
computation.
"""

__version__ = "0.1.0"
