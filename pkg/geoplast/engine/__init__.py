"""Numerical core: tensor algebra, constitutive updates, assembly, time stepping, verification."""
