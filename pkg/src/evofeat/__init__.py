"""Feature construction by evolving small symbolic expressions."""
__version__ = "0.1.0"
