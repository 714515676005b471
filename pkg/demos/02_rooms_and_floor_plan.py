"""
Floor plans and room membership
===============================

The benchmark site: a 33 m x 59 m plan with five named regions, and the
boundary-inclusive point-in-room lookup that drives room-level accuracy.
"""

from bletrack import Position2D, point_in_room
from bletrack.layouts import benchmark_plan, benchmark_registry

plan = benchmark_plan()
print(f"site: {plan.site_width} m x {plan.site_height} m")
for room in plan.rooms:
    print(f"  {room.name:15s} area = {room.area:7.1f} m^2  ({len(room.vertices)} vertices)")

# Membership is boundary-inclusive and resolves overlaps by declaration
# order, so a subject hugging a wall never flickers to "no room".
for x, y in [(3.0, 30.0), (16.0, 50.0), (16.0, 30.0), (16.0, 10.0), (30.0, 10.0), (6.0, 30.0)]:
    print(f"({x:5.1f}, {y:5.1f}) -> {point_in_room(plan, Position2D(x, y))}")

# A coarse ASCII map: one character per 1 m cell, receivers marked '*'.
registry = benchmark_registry()
device_cells = {
    (int(e.position.x), int(e.position.y)) for e in registry.devices.values()
}
glyph = {"Left Corridor": "l", "Right Corridor": "r", "Kitchen": "k",
         "Activity Area": "a", "Lounge": "o", None: "."}
rows = []
for y in range(int(plan.site_height) - 1, -1, -1):
    row = []
    for x in range(int(plan.site_width)):
        if (x, y) in device_cells:
            row.append("*")
        else:
            row.append(glyph[point_in_room(plan, Position2D(x + 0.5, y + 0.5))])
    rows.append("".join(row))
print("\nnorth is up; * marks a ceiling receiver")
print("\n".join(rows))
