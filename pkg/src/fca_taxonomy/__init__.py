"""Formal concept analysis of web-usage data: lattices, stability, taxonomies."""

__all__ = ["__version__"]
__version__ = "0.1.0"
