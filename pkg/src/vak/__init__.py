"""Variational analysis kit: polyhedral cones, coderivatives, and relative
Lipschitz stability of set-valued mappings."""

__version__ = "0.1.0"
