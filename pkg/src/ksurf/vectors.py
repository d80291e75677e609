"""Small 3-vector helpers shared across the package.

Vectors are plain numpy arrays of shape (3,), dtype float64.
"""
from __future__ import annotations

import math

import numpy as np

Vec3 = np.ndarray


def vec(x: float, y: float, z: float) -> Vec3:
    return np.array([x, y, z], dtype=float)


def norm(v: Vec3) -> float:
    return math.sqrt(float(v @ v))


def unit(v: Vec3) -> Vec3:
    n = norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def rotate_about(v: Vec3, axis: Vec3, angle: float) -> Vec3:
    """Rotate ``v`` by ``angle`` (counterclockwise) about the unit vector ``axis``.

    Rodrigues formula: v cos(t) + (k x v) sin(t) + k <k, v> (1 - cos(t)).
    """
    k = unit(axis)
    c = math.cos(angle)
    s = math.sin(angle)
    return v * c + np.cross(k, v) * s + k * float(k @ v) * (1.0 - c)


def angle_between(a: Vec3, b: Vec3) -> float:
    """Unsigned angle in [0, pi] between two nonzero vectors."""
    cr = np.cross(a, b)
    return math.atan2(norm(cr), float(a @ b))
