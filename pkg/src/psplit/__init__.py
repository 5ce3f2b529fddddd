"""Big-M, P-split and hull formulations of convex disjunctive programs."""

__version__ = "0.1.0"
