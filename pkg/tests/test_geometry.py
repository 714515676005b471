import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bletrack.errors import BletrackError
from bletrack.geometry import (
    FloorPlan,
    Position2D,
    RoomPolygon,
    euclidean_distance,
    point_in_room,
)

UNIT_SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]

finite = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)


def plan_with(*rooms):
    return FloorPlan(100, 100, rooms)


class TestEuclideanDistance:
    def test_three_four_five(self):
        assert euclidean_distance(Position2D(0, 0), Position2D(3, 4)) == 5.0

    def test_identity(self):
        assert euclidean_distance(Position2D(1, 1), Position2D(1, 1)) == 0.0

    def test_axis_aligned(self):
        assert euclidean_distance(Position2D(-2, 0), Position2D(2, 0)) == 4.0

    @given(finite, finite, finite, finite, finite, finite)
    def test_triangle_inequality(self, ax, ay, bx, by, cx, cy):
        a, b, c = Position2D(ax, ay), Position2D(bx, by), Position2D(cx, cy)
        assert euclidean_distance(a, c) <= (
            euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-9
        )


class TestPointInRoom:
    def test_interior(self):
        plan = plan_with(RoomPolygon("room", UNIT_SQUARE))
        assert point_in_room(plan, Position2D(0.5, 0.5)) == "room"

    def test_outside(self):
        plan = plan_with(RoomPolygon("room", UNIT_SQUARE))
        assert point_in_room(plan, Position2D(2, 2)) is None

    def test_overlap_declaration_order(self):
        a = RoomPolygon("A", [(0, 0), (2, 0), (2, 2), (0, 2)])
        b = RoomPolygon("B", [(1, 1), (3, 1), (3, 3), (1, 3)])
        p = Position2D(1.5, 1.5)
        assert a.contains(p) and b.contains(p)  # genuinely in both
        assert point_in_room(plan_with(a, b), p) == "A"
        assert point_in_room(plan_with(b, a), p) == "B"

    @pytest.mark.parametrize("p", [(0, 0), (0.5, 0), (1, 1), (0, 0.3)])
    def test_boundary_counts_as_inside(self, p):
        plan = plan_with(RoomPolygon("room", UNIT_SQUARE))
        assert point_in_room(plan, Position2D(*p)) == "room"

    def test_translation_preserves_membership(self):
        rng = np.random.default_rng(5)
        verts = [(0, 0), (4, 1), (5, 4), (2, 6), (-1, 3)]
        room = RoomPolygon("r", [(x + 10, y + 10) for x, y in verts])
        for _ in range(200):
            p = Position2D(rng.uniform(5, 20), rng.uniform(5, 20))
            for dx, dy in ((3.7, -2.1), (0.01, 40.0)):
                moved_room = RoomPolygon("r", [(v.x + dx, v.y + dy) for v in room.vertices])
                assert room.contains(p) == moved_room.contains(Position2D(p.x + dx, p.y + dy))


def _winding_number_contains(vertices, p):
    """Independent oracle: nonzero winding number via signed angle sum."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        v1 = (a.x - p.x, a.y - p.y)
        v2 = (b.x - p.x, b.y - p.y)
        cross = v1[0] * v2[1] - v1[1] * v2[0]
        dot = v1[0] * v2[0] + v1[1] * v2[1]
        total += math.atan2(cross, dot)
    return abs(total) > math.pi  # ~2*pi inside, ~0 outside


@pytest.mark.parametrize(
    "verts",
    [
        UNIT_SQUARE,
        [(0, 0), (4, 0), (4, 1), (1, 1), (1, 4), (0, 4)],  # L-shape
        [(0, 0), (6, 2), (8, 7), (3, 9), (-2, 5)],
        [(2, 0), (3, 2), (5, 2), (3.5, 3.5), (4, 6), (2, 4.5), (0, 6), (0.5, 3.5), (-1, 2), (1, 2)],  # star
    ],
)
def test_matches_winding_oracle(verts):
    room = RoomPolygon("r", verts)
    xs = [v.x for v in room.vertices]
    ys = [v.y for v in room.vertices]
    rng = np.random.default_rng(42)
    for _ in range(1000):
        p = Position2D(
            rng.uniform(min(xs) - 1, max(xs) + 1), rng.uniform(min(ys) - 1, max(ys) + 1)
        )
        assert room.contains(p) == _winding_number_contains(room.vertices, p)


class TestValidation:
    def test_too_few_vertices(self):
        with pytest.raises(BletrackError):
            RoomPolygon("bad", [(0, 0), (1, 1)])

    def test_zero_area(self):
        with pytest.raises(BletrackError):
            RoomPolygon("bad", [(0, 0), (1, 1), (2, 2)])

    def test_self_intersecting(self):
        with pytest.raises(BletrackError):
            RoomPolygon("bowtie", [(0, 0), (2, 2), (2, 0), (0, 2)])

    def test_clockwise_normalized_to_ccw(self):
        room = RoomPolygon("cw", [(0, 0), (0, 1), (1, 1), (1, 0)])
        assert room.area > 0

    def test_duplicate_room_names(self):
        r = RoomPolygon("same", UNIT_SQUARE)
        with pytest.raises(BletrackError):
            FloorPlan(10, 10, [r, r])

    def test_room_outside_site(self):
        r = RoomPolygon("big", [(0, 0), (20, 0), (20, 20), (0, 20)])
        with pytest.raises(BletrackError):
            FloorPlan(10, 10, [r])

    def test_nonfinite_position(self):
        with pytest.raises(BletrackError):
            Position2D(math.nan, 0)
