"""Synthetic benchmark site: a 33 m x 59 m plan with 39 receivers.

The layout is representative, not a survey of any real building: five named
regions with deliberately uneven receiver density (dense Left Corridor,
Kitchen and Activity Area; sparse Right Corridor and Lounge) so coverage
disparity and its effect on localization are reproducible at desk scale.
"""

from __future__ import annotations

from .geometry import FloorPlan, Position2D, RoomPolygon
from .pathloss import PathLossParams
from .registry import DeviceEntry, DeviceRegistry
from .simulator import SimulationConfig, SubjectPath

SITE_WIDTH = 33.0
SITE_HEIGHT = 59.0
BENCHMARK_SEED = 60451


def benchmark_plan() -> FloorPlan:
    def rect(name, x0, y0, x1, y1):
        return RoomPolygon(name, [(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    rooms = (
        rect("Left Corridor", 0, 0, 6, 59),
        rect("Right Corridor", 27, 0, 33, 59),
        rect("Kitchen", 6, 40, 27, 59),
        rect("Activity Area", 6, 20, 27, 40),
        rect("Lounge", 6, 0, 27, 20),
    )
    return FloorPlan(SITE_WIDTH, SITE_HEIGHT, rooms)


def benchmark_registry(
    m_rssi: float = -70.0, n_factor: float = 2.0
) -> DeviceRegistry:
    spots: list[tuple[float, float]] = []
    # Left Corridor: tight chain hugging the west wall
    spots += [(1.5, y) for y in (4.0, 10.5, 17.0, 23.5, 30.0, 36.5, 43.0, 49.5, 56.0)]
    # Kitchen: 4 x 3 grid minus the southeast corner
    spots += [
        (x, y)
        for y in (43.0, 49.5, 56.0)
        for x in (9.5, 14.5, 19.5, 24.5)
        if not (x == 24.5 and y == 43.0)
    ]
    # Activity Area: 4 x 3 grid minus the southeast corner
    spots += [
        (x, y)
        for y in (23.0, 29.5, 36.0)
        for x in (9.5, 14.5, 19.5, 24.5)
        if not (x == 24.5 and y == 23.0)
    ]
    # Right Corridor: sparse chain hugging the east wall
    spots += [(31.5, y) for y in (10.0, 24.0, 38.0, 52.0)]
    # Lounge: corners only
    spots += [(10.0, 5.0), (20.0, 5.0), (10.0, 15.0), (20.0, 15.0)]

    params = PathLossParams(m_rssi, n_factor)
    devices = {
        f"dev{i + 1:02d}": DeviceEntry(Position2D(x, y), params)
        for i, (x, y) in enumerate(spots)
    }
    return DeviceRegistry(devices)


def _loop(points: list[tuple[float, float]], pauses: list[float], repeats: int):
    """Concatenate a closed loop (first == last point) `repeats` times."""
    wps = list(points)
    ps = list(pauses)
    for _ in range(repeats - 1):
        wps += points[1:]
        ps += pauses[1:]
    return tuple(Position2D(x, y) for x, y in wps), tuple(ps)


def benchmark_subjects() -> tuple[SubjectPath, ...]:
    # Each subject loops through dense and sparse regions with standing
    # dwells, so every method sees both rich and starved coverage.
    s1_wp, s1_pause = _loop(
        [
            (16.0, 50.0), (2.5, 50.0), (2.5, 10.0), (16.0, 10.0),
            (30.5, 10.0), (30.5, 17.0), (30.5, 30.0), (16.0, 30.0), (16.0, 50.0),
        ],
        [20.0, 0.0, 0.0, 25.0, 40.0, 15.0, 10.0, 25.0, 20.0],
        repeats=2,
    )
    s1 = SubjectPath("s1", "b1", waypoints=s1_wp, speed=1.2, pauses=s1_pause)

    s2_wp, s2_pause = _loop(
        [
            (12.0, 45.0), (24.0, 55.0), (31.0, 45.0), (31.0, 31.0),
            (16.0, 30.0), (2.5, 36.0), (2.5, 50.0), (12.0, 52.0), (12.0, 45.0),
        ],
        [15.0, 15.0, 30.0, 25.0, 15.0, 0.0, 10.0, 10.0, 15.0],
        repeats=2,
    )
    s2 = SubjectPath("s2", "b2", waypoints=s2_wp, speed=1.0, pauses=s2_pause)

    s3_wp, s3_pause = _loop(
        [
            (15.0, 8.0), (10.0, 15.0), (20.0, 15.0), (30.5, 14.0),
            (30.5, 5.0), (16.0, 4.0), (15.0, 8.0),
        ],
        [20.0, 15.0, 15.0, 35.0, 25.0, 15.0, 20.0],
        repeats=3,
    )
    s3 = SubjectPath("s3", "b3", waypoints=s3_wp, speed=1.3, pauses=s3_pause)
    return (s1, s2, s3)


def benchmark_config(seed: int = BENCHMARK_SEED) -> SimulationConfig:
    """The fixed evaluation scenario: 3 subjects, 10 minutes, noisy channel.

    Receivers in the sparse regions carry a negative bias emulating the
    signal attenuation that made those areas weak in the first place."""
    registry = benchmark_registry()
    bias = {
        dev: -5.0
        for dev in registry.ids()
        if dev in {f"dev{i:02d}" for i in range(32, 40)}  # Right Corridor + Lounge
    }
    return SimulationConfig(
        seed=seed,
        plan=benchmark_plan(),
        devices=registry,
        subjects=benchmark_subjects(),
        duration_s=600.0,
        ble_rate=2.0,
        imu_rate=42.0,
        rssi_noise_sigma=4.0,
        dropout_prob=0.3,
        detection_range=10.0,
        device_bias=bias,
    )


def probe_grid(plan: FloorPlan, target_count: int = 131) -> list[Position2D]:
    """Equally spaced probe locations covering the site, close to target_count."""
    spacing = (plan.site_width * plan.site_height / target_count) ** 0.5
    nx = max(1, round(plan.site_width / spacing))
    ny = max(1, round(plan.site_height / spacing))
    return [
        Position2D((i + 0.5) * plan.site_width / nx, (j + 0.5) * plan.site_height / ny)
        for j in range(ny)
        for i in range(nx)
    ]
