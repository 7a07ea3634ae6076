"""flashlab: intrinsic flash photograph formation, training, and relighting."""

__version__ = "0.1.0"
