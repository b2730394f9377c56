import numpy as np
import pytest
from scipy.spatial import ConvexHull

from lamgen.geometry import ConvexPolygon, Tolerances


@pytest.fixture
def tol():
    return Tolerances()


def random_convex_polygon(rng, n_points=8, scale=10.0, center=(0.0, 0.0)):
    """Hull of a random point cloud; scipy does the hull so the polygon is
    built independently of the kernel under test."""
    while True:
        pts = rng.uniform(-scale, scale, size=(n_points, 2)) + np.asarray(center)
        try:
            hull = ConvexHull(pts)
        except Exception:
            continue
        verts = [tuple(pts[i]) for i in hull.vertices]
        if len(verts) >= 3:
            return ConvexPolygon(tuple(verts))
