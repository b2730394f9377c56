"""lamgen: laminate layup -> discrete crack-network model -> mesh -> small explicit solve."""

__version__ = "0.1.0"
