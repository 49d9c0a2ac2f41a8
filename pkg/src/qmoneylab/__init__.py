"""Simulation lab for quantum money, explicit state t-designs and point-function copy-protection."""

__version__ = "0.1.0"
