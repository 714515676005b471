import pytest

from bletrack.geometry import FloorPlan, Position2D, RoomPolygon
from bletrack.ingest import save_scenario
from bletrack.pathloss import PathLossParams
from bletrack.registry import DeviceEntry, DeviceRegistry
from bletrack.simulator import SimulationConfig, SubjectPath


def square_plan(side=20.0):
    room = RoomPolygon("Main", [(0, 0), (side, 0), (side, side), (0, side)])
    return FloorPlan(side, side, [room])


def small_registry():
    params = PathLossParams(-70.0, 2.0)
    spots = {
        "a": (3.0, 3.0),
        "b": (17.0, 3.0),
        "c": (17.0, 17.0),
        "d": (3.0, 17.0),
        "e": (10.0, 10.0),
    }
    return DeviceRegistry(
        {k: DeviceEntry(Position2D(x, y), params) for k, (x, y) in spots.items()}
    )


def small_config(seed=11, **overrides):
    """A quick 90 s scenario: one subject looping a 20 m square room."""
    path = SubjectPath(
        "s1",
        "b1",
        waypoints=(
            Position2D(6.0, 6.0),
            Position2D(14.0, 6.0),
            Position2D(14.0, 14.0),
            Position2D(6.0, 14.0),
            Position2D(6.0, 6.0),
        ),
        speed=1.0,
        pauses=(10.0,),
    )
    base = dict(
        seed=seed,
        plan=square_plan(),
        devices=small_registry(),
        subjects=(path,),
        duration_s=90.0,
        rssi_noise_sigma=2.0,
        dropout_prob=0.1,
        detection_range=15.0,
    )
    base.update(overrides)
    return SimulationConfig(**base)


@pytest.fixture(scope="session")
def small_scenario_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scenario") / "small.json"
    save_scenario(path, small_config())
    return path


@pytest.fixture(scope="session")
def small_sim_dir(small_scenario_file, tmp_path_factory):
    """Simulate the small scenario once for the whole session."""
    from bletrack.cli import run

    out = tmp_path_factory.mktemp("simdata")
    assert run(["simulate", "--scenario", str(small_scenario_file), "--out", str(out)]) == 0
    return out
