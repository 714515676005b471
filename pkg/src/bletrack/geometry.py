"""Planar geometry: positions, room polygons, floor plans, membership tests.

Coordinates are meters with the origin at the site's southwest corner,
x east and y north. All file formats share this frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BletrackError

_EPS = 1e-9


@dataclass(frozen=True)
class Position2D:
    """A point in the site frame (meters east, meters north)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise BletrackError(f"non-finite position ({self.x}, {self.y})")

    def offset(self, dx: float, dy: float) -> "Position2D":
        return Position2D(self.x + dx, self.y + dy)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def euclidean_distance(a: Position2D, b: Position2D) -> float:
    """Distance in meters between two positions."""
    return math.hypot(a.x - b.x, a.y - b.y)


def midpoint(a: Position2D, b: Position2D) -> Position2D:
    return Position2D((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)


def _signed_area(vertices: tuple[Position2D, ...]) -> float:
    area = 0.0
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        area += a.x * b.y - b.x * a.y
    return area / 2.0


def _on_segment(p: Position2D, a: Position2D, b: Position2D, tol: float = _EPS) -> bool:
    """True if p lies on segment ab within tol (perpendicular distance)."""
    abx, aby = b.x - a.x, b.y - a.y
    apx, apy = p.x - a.x, p.y - a.y
    seg_len2 = abx * abx + aby * aby
    if seg_len2 == 0.0:
        return math.hypot(apx, apy) <= tol
    cross = abx * apy - aby * apx
    if abs(cross) > tol * math.sqrt(seg_len2):
        return False
    t = (apx * abx + apy * aby) / seg_len2
    return -tol <= t <= 1.0 + tol


def _segments_cross(
    a: Position2D, b: Position2D, c: Position2D, d: Position2D
) -> bool:
    """Proper intersection of open segments ab and cd (shared endpoints excluded)."""

    def orient(p, q, r):
        v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
        if abs(v) < _EPS:
            return 0
        return 1 if v > 0 else -1

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


@dataclass(frozen=True)
class RoomPolygon:
    """A named simple polygon. Vertices are normalized counterclockwise."""

    name: str
    vertices: tuple[Position2D, ...]

    def __init__(self, name: str, vertices):
        verts = tuple(
            v if isinstance(v, Position2D) else Position2D(float(v[0]), float(v[1]))
            for v in vertices
        )
        if len(verts) < 3:
            raise BletrackError(f"room {name!r}: polygon needs >= 3 vertices")
        area = _signed_area(verts)
        if abs(area) < _EPS:
            raise BletrackError(f"room {name!r}: polygon has zero area")
        if area < 0:
            verts = verts[::-1]
        self._check_simple(name, verts)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "vertices", verts)

    @staticmethod
    def _check_simple(name: str, verts: tuple[Position2D, ...]) -> None:
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # adjacent edges share a vertex by construction
                c, d = verts[j], verts[(j + 1) % n]
                if _segments_cross(a, b, c, d):
                    raise BletrackError(f"room {name!r}: polygon self-intersects")

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    def contains(self, p: Position2D) -> bool:
        """Even-odd ray casting; points on the boundary count as inside."""
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            if _on_segment(p, verts[i], verts[(i + 1) % n]):
                return True
        inside = False
        j = n - 1
        for i in range(n):
            vi, vj = verts[i], verts[j]
            if (vi.y > p.y) != (vj.y > p.y):
                x_cross = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y)
                if p.x < x_cross:
                    inside = not inside
            j = i
        return inside


@dataclass(frozen=True)
class FloorPlan:
    """Bounded rectangular site with named room polygons."""

    site_width: float
    site_height: float
    rooms: tuple[RoomPolygon, ...] = field(default_factory=tuple)

    def __init__(self, site_width: float, site_height: float, rooms=()):
        if not (site_width > 0 and site_height > 0):
            raise BletrackError("site bounds must be positive")
        rooms = tuple(rooms)
        names = [r.name for r in rooms]
        if len(set(names)) != len(names):
            raise BletrackError("room names must be unique")
        for room in rooms:
            for v in room.vertices:
                if not (-_EPS <= v.x <= site_width + _EPS and -_EPS <= v.y <= site_height + _EPS):
                    raise BletrackError(
                        f"room {room.name!r} vertex ({v.x}, {v.y}) outside site bounds"
                    )
        object.__setattr__(self, "site_width", float(site_width))
        object.__setattr__(self, "site_height", float(site_height))
        object.__setattr__(self, "rooms", rooms)

    def room_names(self) -> list[str]:
        return [r.name for r in self.rooms]

    def contains(self, p: Position2D) -> bool:
        return 0.0 <= p.x <= self.site_width and 0.0 <= p.y <= self.site_height


def point_in_room(plan: FloorPlan, p: Position2D) -> str | None:
    """First room (in declaration order) containing p, or None.

    Declaration order resolves overlaps; boundary points count as inside.
    """
    for room in plan.rooms:
        if room.contains(p):
            return room.name
    return None
