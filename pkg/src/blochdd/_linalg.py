"""Small 3x3 helpers used throughout: cross-product matrices and rotations."""

from __future__ import annotations

import numpy as np

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])


def cross_matrix(v) -> np.ndarray:
    """Matrix [v x] such that cross_matrix(v) @ r == np.cross(v, r)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Right-handed rotation of a vector by `angle` about the unit vector `axis`.

    Convention: R(n, phi) = exp(-phi [n x]); for the x axis this gives
    [[1, 0, 0], [0, cos, sin], [0, -sin, cos]].
    """
    n = np.asarray(axis, dtype=float)
    k = cross_matrix(n)
    c, s = np.cos(angle), np.sin(angle)
    return c * np.eye(3) - s * k + (1.0 - c) * np.outer(n, n)


def rotation_batch(axis, angles: np.ndarray) -> np.ndarray:
    """Rotation matrices for an array of angles about one fixed axis, shape (..., 3, 3)."""
    n = np.asarray(axis, dtype=float)
    k = cross_matrix(n)
    ang = np.asarray(angles, dtype=float)
    c = np.cos(ang)[..., None, None]
    s = np.sin(ang)[..., None, None]
    return c * np.eye(3) + s * (-k) + (1.0 - c) * np.outer(n, n)
