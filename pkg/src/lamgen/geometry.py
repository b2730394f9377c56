"""Small 2D convex-polygon kernel used by the partitioning pipeline.

Everything downstream (strip tiling, cracklet insertion, interface and
delamination partitioning) reduces to two operations on convex polygons:
splitting by a directed line and clipping to a parallel strip.  Points are
plain float pairs; polygons are immutable vertex tuples in CCW order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

SIDE_LEFT = 1
SIDE_ON = 0
SIDE_RIGHT = -1

_ENV_PREFIX = "LAMGEN_"


@dataclass(frozen=True)
class Tolerances:
    """Geometric tolerances, all in mm-based units.

    coincidence_eps: distance below which points/vertices are considered
        coincident and get snapped onto cut lines (mm).
    area_threshold: cells smaller than this are suppression candidates (mm^2).
    angle_eps: directions within this angle are parallel (rad).
    """

    coincidence_eps: float = 1e-9
    area_threshold: float = 1e-9
    angle_eps: float = 1e-9

    @classmethod
    def from_env(cls, **overrides: float) -> "Tolerances":
        """Defaults, then explicit overrides; LAMGEN_* environment values win
        so a run can be forced without editing config files."""
        vals = dict(overrides)
        for name in ("coincidence_eps", "area_threshold", "angle_eps"):
            env = os.environ.get(_ENV_PREFIX + name.upper())
            if env is not None:
                vals[name] = float(env)
        return cls(**vals)


def polygon_area(vertices) -> float:
    """Signed shoelace area; positive for CCW."""
    a = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon, vertices CCW, positive area.

    The heavy validation (convexity within tolerance) lives in validate();
    the constructor only normalizes orientation and rejects the obviously
    degenerate, because polygons are built in bulk by the partitioners.
    """

    vertices: tuple

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(self.vertices)}")

    @classmethod
    def build(cls, points, tol: Tolerances | None = None) -> "ConvexPolygon":
        """Validating constructor: dedupes, orients CCW, checks convexity."""
        tol = tol or Tolerances()
        pts = [tuple(map(float, p)) for p in points]
        out = []
        for p in pts:
            if out and _dist(out[-1], p) <= tol.coincidence_eps:
                continue
            out.append(p)
        while len(out) > 1 and _dist(out[0], out[-1]) <= tol.coincidence_eps:
            out.pop()
        if len(out) < 3:
            raise GeometryError("degenerate polygon after dedup")
        if polygon_area(out) < 0:
            out.reverse()
        poly = cls(tuple(out))
        poly.validate(tol)
        return poly

    def validate(self, tol: Tolerances) -> None:
        """Raise unless CCW, positive area and convex up to coincidence_eps."""
        if self.area <= 0.0:
            raise GeometryError(f"non-positive area {self.area}")
        n = len(self.vertices)
        # reflex test scaled by edge lengths so eps means a lateral deviation
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            c = self.vertices[(i + 2) % n]
            ab = (b[0] - a[0], b[1] - a[1])
            bc = (c[0] - b[0], c[1] - b[1])
            la = math.hypot(*ab)
            lb = math.hypot(*bc)
            if la <= tol.coincidence_eps or lb <= tol.coincidence_eps:
                raise GeometryError("duplicate consecutive vertices")
            cross = ab[0] * bc[1] - ab[1] * bc[0]
            if cross < -tol.coincidence_eps * (la + lb):
                raise GeometryError(f"reflex corner at vertex {i + 1}")

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def centroid(self) -> tuple:
        # area-weighted centroid; falls back to vertex mean for slivers
        a2 = 0.0
        cx = cy = 0.0
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            w = x0 * y1 - x1 * y0
            a2 += w
            cx += (x0 + x1) * w
            cy += (y0 + y1) * w
        if abs(a2) < 1e-300:
            xs = [p[0] for p in self.vertices]
            ys = [p[1] for p in self.vertices]
            return (sum(xs) / len(xs), sum(ys) / len(ys))
        return (cx / (3.0 * a2), cy / (3.0 * a2))

    def bbox(self) -> tuple:
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def edges(self):
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]

    def contains(self, point, eps: float = 0.0) -> bool:
        """Point inside or on boundary (inflated by eps)."""
        px, py = point
        for (ax, ay), (bx, by) in self.edges():
            ex, ey = bx - ax, by - ay
            cross = ex * (py - ay) - ey * (px - ax)
            if cross < -eps * math.hypot(ex, ey):
                return False
        return True


def _dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class DirectedLine:
    """Infinite directed line: origin plus unit direction.

    The left normal is direction rotated +90 degrees, so offset_of() is
    positive for points to the left of travel.
    """

    origin: tuple
    direction: tuple

    @classmethod
    def from_angle(cls, origin, angle_deg: float) -> "DirectedLine":
        th = math.radians(angle_deg)
        return cls(tuple(map(float, origin)), (math.cos(th), math.sin(th)))

    @classmethod
    def through(cls, a, b) -> "DirectedLine":
        d = (b[0] - a[0], b[1] - a[1])
        ln = math.hypot(*d)
        if ln == 0.0:
            raise GeometryError("coincident points define no line")
        return cls(tuple(map(float, a)), (d[0] / ln, d[1] / ln))

    @property
    def normal(self) -> tuple:
        return (-self.direction[1], self.direction[0])

    def offset_of(self, p) -> float:
        n = self.normal
        return (p[0] - self.origin[0]) * n[0] + (p[1] - self.origin[1]) * n[1]

    def station_of(self, p) -> float:
        d = self.direction
        return (p[0] - self.origin[0]) * d[0] + (p[1] - self.origin[1]) * d[1]

    def point_at(self, station: float, offset: float = 0.0) -> tuple:
        n = self.normal
        return (
            self.origin[0] + station * self.direction[0] + offset * n[0],
            self.origin[1] + station * self.direction[1] + offset * n[1],
        )

    def offset_line(self, offset: float) -> "DirectedLine":
        """Parallel line shifted along the left normal."""
        n = self.normal
        return DirectedLine(
            (self.origin[0] + offset * n[0], self.origin[1] + offset * n[1]),
            self.direction,
        )

    def parallel_to(self, other: "DirectedLine", angle_eps: float) -> bool:
        cross = self.direction[0] * other.direction[1] - self.direction[1] * other.direction[0]
        return abs(cross) <= math.sin(angle_eps) + 1e-300


def classify_side(point, line: DirectedLine, tol: Tolerances) -> int:
    """SIDE_LEFT / SIDE_ON / SIDE_RIGHT with the coincidence band counting as ON."""
    s = line.offset_of(point)
    if abs(s) <= tol.coincidence_eps:
        return SIDE_ON
    return SIDE_LEFT if s > 0.0 else SIDE_RIGHT


def split_convex(poly: ConvexPolygon, line: DirectedLine, tol: Tolerances):
    """Split a convex polygon by a directed line.

    Returns (left, right); a side is None when the polygon lies entirely on
    the other side (tangent contact included).  Vertices within
    coincidence_eps of the line are snapped onto it first, which makes the
    operation idempotent and keeps near-tangent cuts from shedding slivers.
    Pieces with tiny positive area are still returned; suppression is the
    caller's decision.
    """
    eps = tol.coincidence_eps
    verts = []
    offs = []
    snapped = False
    for p in poly.vertices:
        s = line.offset_of(p)
        if abs(s) <= eps:
            if s != 0.0:
                n = line.normal
                p = (p[0] - s * n[0], p[1] - s * n[1])
                snapped = True
            s = 0.0
        verts.append(p)
        offs.append(s)

    any_left = any(s > 0.0 for s in offs)
    any_right = any(s < 0.0 for s in offs)
    if not any_right:
        kept = poly if not snapped else ConvexPolygon(tuple(verts))
        return (kept if any_left else None), None
    if not any_left:
        kept = poly if not snapped else ConvexPolygon(tuple(verts))
        return None, kept

    left_pts: list = []
    right_pts: list = []
    n = len(verts)
    for i in range(n):
        a, sa = verts[i], offs[i]
        b, sb = verts[(i + 1) % n], offs[(i + 1) % n]
        if sa >= 0.0:
            left_pts.append(a)
        if sa <= 0.0:
            right_pts.append(a)
        if sa * sb < 0.0:
            t = sa / (sa - sb)
            x = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            left_pts.append(x)
            right_pts.append(x)

    return _finish_side(left_pts, eps), _finish_side(right_pts, eps)


def _finish_side(pts, eps):
    out = []
    for p in pts:
        if out and _dist(out[-1], p) <= eps:
            continue
        out.append(p)
    while len(out) > 1 and _dist(out[0], out[-1]) <= eps:
        out.pop()
    if len(out) < 3:
        return None
    return ConvexPolygon(tuple(out))


def clip_strip(poly: ConvexPolygon, axis: DirectedLine, offset_lo: float,
               offset_hi: float, tol: Tolerances):
    """Intersect poly with the strip offset_lo <= offset <= offset_hi about axis.

    Offsets are measured along the axis left normal.  Returns the clipped
    polygon or None when the strip misses.
    """
    if offset_hi <= offset_lo:
        raise GeometryError(f"empty strip [{offset_lo}, {offset_hi}]")
    _, kept = split_convex(poly, axis.offset_line(offset_hi), tol)
    if kept is None:
        return None
    kept, _ = split_convex(kept, axis.offset_line(offset_lo), tol)
    return kept


def convex_intersection(a: ConvexPolygon, b: ConvexPolygon, tol: Tolerances):
    """a intersect b via successive half-plane clipping, or None if empty."""
    out = a
    for p, q in b.edges():
        line = DirectedLine.through(p, q)
        out, _ = split_convex(out, line, tol)
        if out is None:
            return None
    return out


def intersection_area(a: ConvexPolygon, b: ConvexPolygon, tol: Tolerances) -> float:
    # cheap bbox reject before the clip cascade
    ax0, ay0, ax1, ay1 = a.bbox()
    bx0, by0, bx1, by1 = b.bbox()
    if ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0:
        return 0.0
    got = convex_intersection(a, b, tol)
    return got.area if got is not None else 0.0


def rectangle(length: float, width: float) -> ConvexPolygon:
    """Axis-aligned rectangle centered at the origin: x spans length, y width."""
    hx, hy = 0.5 * length, 0.5 * width
    return ConvexPolygon(((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)))
