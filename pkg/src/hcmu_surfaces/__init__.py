"""HCMU metrics realized as Weingarten surfaces in 3-dimensional space forms."""

__version__ = "0.1.0"
