"""Numerical laboratory for generalized Abelian integrals and the limit cycles they produce."""
