"""Conformally flat Lorentzian metrics: jets, curvature, Walker-frame data, holonomy and Killing checks."""

__version__ = "0.1.0"
