"""Equal-weight fusion of BLE fixes with dead-reckoned IMU displacement.

At each tick the previous fused position is propagated by the IMU
displacement over the tick; when a BLE fix is available for the tick the
published position is the midpoint of the propagated position and the BLE
fix, otherwise the propagated position is published as-is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

from .deadreckoning import ImuDelta
from .errors import EmptyInputError
from .geometry import Position2D, midpoint
from .trilateration import BleFix

FixSource = Literal["ble_only", "imu_propagated", "fused"]

DEFAULT_TICK_S = 1.0


@dataclass(frozen=True)
class TrackFix:
    timestamp: float
    position: Position2D
    source: FixSource


@dataclass(frozen=True)
class FusedTrack:
    """Time-ordered fused position fixes for one beacon."""

    beacon_id: str
    fixes: tuple[TrackFix, ...]

    def positions(self) -> list[Position2D]:
        return [f.position for f in self.fixes]


def fuse_step(
    prev_fused: Position2D,
    imu_delta: ImuDelta,
    ble_fix: Position2D | None,
) -> tuple[Position2D, FixSource]:
    """One fusion tick: IMU propagation, then averaging with the BLE fix.

    The propagated position is prev_fused + displacement; with a BLE fix the
    result is the exact midpoint of the two (equal modality weights).
    """
    imu_pos = prev_fused.offset(imu_delta.dx, imu_delta.dy)
    if ble_fix is None:
        return imu_pos, "imu_propagated"
    return midpoint(imu_pos, ble_fix), "fused"


def run_tracker(
    ble_fixes: Sequence[BleFix],
    imu_trajectory: Callable[[float, float], ImuDelta] | None,
    t0: float,
    p0: Position2D,
    *,
    tick: float = DEFAULT_TICK_S,
    t_end: float | None = None,
    beacon_id: str | None = None,
) -> FusedTrack:
    """Produce the fused track from t0, seeded at p0, one fix per tick.

    Within each tick (t - tick, t] the most recent BLE fix is fused; absent
    IMU coverage is treated as zero displacement (subject presumed
    stationary). The track never emits before t0 and is deterministic given
    its inputs.
    """
    if not ble_fixes and imu_trajectory is None:
        raise EmptyInputError("no BLE fixes and no IMU trajectory")
    if beacon_id is None:
        beacon_id = ble_fixes[0].beacon_id if ble_fixes else ""
    if t_end is None:
        if ble_fixes:
            t_end = ble_fixes[-1].timestamp
        else:
            t_end = getattr(imu_trajectory, "end_time", None)
            if t_end is None:
                raise EmptyInputError("no BLE fixes; t_end required for IMU-only track")

    fixes: list[TrackFix] = [TrackFix(t0, p0, "ble_only")]
    prev_pos = p0
    next_fix = 0
    n_ticks = int((t_end - t0) / tick + 1e-9)
    for k in range(1, n_ticks + 1):
        t = t0 + k * tick
        t_prev = t0 + (k - 1) * tick
        if imu_trajectory is not None:
            delta = imu_trajectory(t_prev, t)
        else:
            delta = ImuDelta(t_prev, t, 0.0, 0.0)

        ble_pos: Position2D | None = None
        while next_fix < len(ble_fixes) and ble_fixes[next_fix].timestamp <= t + 1e-9:
            if ble_fixes[next_fix].timestamp > t_prev + 1e-9:
                ble_pos = ble_fixes[next_fix].position
            next_fix += 1

        prev_pos, source = fuse_step(prev_pos, delta, ble_pos)
        fixes.append(TrackFix(t, prev_pos, source))
    return FusedTrack(beacon_id, tuple(fixes))
