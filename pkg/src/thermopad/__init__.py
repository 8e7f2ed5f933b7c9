"""Presentation-attack detection workbench for paired RGB and thermal hand images."""

__version__ = "0.1.0"
