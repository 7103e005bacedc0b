"""Closed polygon measures: shoelace area, lamina centroid, perimeter, containment."""

import numpy as np


def signed_area(points: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise vertex order."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def lamina_centroid(points: np.ndarray) -> np.ndarray:
    """Centroid of the uniform-density region bounded by a closed polygon.

    Args:
        points: (n, 2) vertices, either orientation, not repeating the first
            vertex at the end.

    Returns:
        The (2,) area-weighted centroid.
    """
    x, y = points[:, 0], points[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return np.array([cx, cy])


def perimeter(points: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)))


def isoperimetric_ratio(points: np.ndarray) -> float:
    """P^2 / (4 pi A); equals 1 for a circle and exceeds 1 otherwise."""
    return perimeter(points) ** 2 / (4.0 * np.pi * abs(signed_area(points)))


def contains(points: np.ndarray, q: np.ndarray) -> bool:
    """Strict containment of q in a convex counterclockwise polygon."""
    edges = np.roll(points, -1, axis=0) - points
    rel = np.asarray(q, dtype=float) - points
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    return bool(np.all(cross > 0.0))


def is_convex(points: np.ndarray) -> bool:
    """All turns strictly left for a counterclockwise polygon."""
    e0 = np.roll(points, -1, axis=0) - points
    e1 = np.roll(e0, -1, axis=0)
    turn = e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0]
    return bool(np.all(turn > 0.0))
