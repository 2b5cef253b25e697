"""Scheduling splittable jobs on configurable machines."""
__version__ = "0.1.0"
