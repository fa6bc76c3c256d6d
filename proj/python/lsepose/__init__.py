"""Geometric 6D pose estimation for untextured CAD models.

Rotation-invariant local surface embeddings, embedding-based 2D-3D
correspondence generation, and mask-constrained robust pose estimation,
with an oracle scene renderer for fully labeled synthetic evaluations.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
