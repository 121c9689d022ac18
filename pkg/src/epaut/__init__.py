"""Numerical momentum-map pairs and peakon dynamics for non-abelian fluids."""

__version__ = "0.1.0"

from .groups import CircleGroup, Rotation3Group, make_group

__all__ = ["CircleGroup", "Rotation3Group", "make_group", "__version__"]
