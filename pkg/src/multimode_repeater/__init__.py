"""Multimode-memory quantum repeater: analytic rates, CRIB memory model, Fock-state oracle and Monte Carlo."""

__version__ = "0.1.0"
