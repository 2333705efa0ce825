"""Occlusion-aware local navigation: blind-spot costmap layer, DWA variants and a 2D simulator."""

__version__ = "0.1.0"
