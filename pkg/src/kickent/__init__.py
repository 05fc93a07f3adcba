"""Entanglement production in weakly coupled kicked tops and rotors."""
__version__ = "0.1.0"
