"""Electromechanical source term coupling the potential to the director.

Per cell, with gradients from two consecutive time levels and the midpoint
director d_half,

    S = eps1/(2|C|) * int_C [(grad_new . d) grad_old + (grad_old . d) grad_new]

evaluated exactly as the equal-weight average over the cell's two triangles.
The planar gradients are embedded into 3-space with zero third component so
the torque S x d in the momentum update is an ordinary cross product.
"""

from __future__ import annotations

import numpy as np

from .fem import TriangleGradientField, in_plane
from .grid import CellVectorField


def source_term(
    grads_old: TriangleGradientField,
    grads_new: TriangleGradientField,
    d_half: CellVectorField,
    eps1: float,
) -> np.ndarray:
    """Per-cell source vectors, shape (n, n, 3) with zero third component."""
    p = in_plane(d_half.interior)

    def sym(go, gn):
        return np.sum(gn * p, axis=-1, keepdims=True) * go + np.sum(go * p, axis=-1, keepdims=True) * gn

    planar = 0.25 * eps1 * (sym(grads_old.lower, grads_new.lower) + sym(grads_old.upper, grads_new.upper))
    out = np.zeros(planar.shape[:-1] + (3,))
    out[..., :2] = planar
    return out
