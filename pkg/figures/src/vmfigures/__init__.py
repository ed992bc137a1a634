"""Batch renderer turning vmlab CSV manifests into PNG/SVG figures."""

__version__ = "0.1.0"
