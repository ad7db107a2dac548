"""Numerical toolkit for generalized partial-slice monogenic functions."""
