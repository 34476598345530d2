"""Mixed-path extremization of a discretized action, and propagator checks."""

__version__ = "0.1.0"
