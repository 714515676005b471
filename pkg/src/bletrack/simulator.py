"""Deterministic synthetic environment: trajectories, BLE channel, IMU streams.

Subjects walk piecewise-linear waypoint paths (with optional pauses); the
BLE channel inverts the path-loss law per in-range receiver and adds
Gaussian dB noise plus Bernoulli dropout; the IMU model superposes a gait
sinusoid on gravity, encodes turns in the gyro, and rotates a dipping
magnetic-north field into the body frame. Every stream draws from its own
seeded substream keyed by (seed, channel, subject, device), so adding a
subject or receiver never perturbs existing streams.
"""

from __future__ import annotations

import hashlib
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .deadreckoning import ImuSample
from .errors import BletrackError
from .geometry import FloorPlan, Position2D, euclidean_distance, point_in_room
from .pathloss import RssiHit, distance_to_rssi
from .registry import DeviceRegistry

GRAVITY = 9.81
MIN_CHANNEL_DISTANCE_M = 1e-3  # keeps the path-loss inverse defined at a receiver

_CHANNEL_BLE = 0
_CHANNEL_IMU = 1
_CHANNEL_PROBE = 2


def _stable_hash(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "big")


def _substream(seed: int, channel: int, *labels: str | int) -> np.random.Generator:
    entropy = [seed, channel] + [
        _stable_hash(x) if isinstance(x, str) else x for x in labels
    ]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class SubjectPath:
    """One subject's scripted walk: waypoints at a constant speed, with
    optional per-waypoint pauses (seconds spent standing before moving on)."""

    subject_id: str
    beacon_id: str
    waypoints: tuple[Position2D, ...]
    speed: float  # m/s
    pauses: tuple[float, ...] = ()
    step_length: float = 0.7

    def __post_init__(self):
        if not self.waypoints:
            raise BletrackError(f"subject {self.subject_id!r}: empty waypoint list")
        if not self.speed > 0:
            raise BletrackError(f"subject {self.subject_id!r}: speed must be > 0")


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    plan: FloorPlan
    devices: DeviceRegistry
    subjects: tuple[SubjectPath, ...]
    duration_s: float = 600.0
    ble_rate: float = 2.0
    imu_rate: float = 42.0
    rssi_noise_sigma: float = 4.0
    dropout_prob: float = 0.0
    detection_range: float = 15.0
    device_bias: dict[str, float] = field(default_factory=dict)
    accel_noise: float = 0.05
    gyro_noise: float = 0.005
    mag_noise: float = 0.005
    gait_amplitude: float = 1.5
    turn_rate: float = math.pi / 4  # rad/s heading slew while cornering
    mag_dip: float = math.radians(60.0)

    def __post_init__(self):
        if not (self.ble_rate > 0 and self.imu_rate > 0):
            raise BletrackError("sampling rates must be > 0")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise BletrackError(f"dropout_prob must be in [0,1], got {self.dropout_prob}")
        if self.rssi_noise_sigma < 0:
            raise BletrackError("rssi_noise_sigma must be >= 0")
        if not self.duration_s > 0:
            raise BletrackError("duration_s must be > 0")


@dataclass(frozen=True)
class _Segment:
    t_start: float
    t_end: float
    p_start: Position2D
    p_end: Position2D
    moving: bool


class TruthTrack:
    """Continuous ground-truth motion for one subject.

    Piecewise-linear over waypoints at constant speed, holding position
    during pauses and after the path ends.
    """

    def __init__(self, path: SubjectPath):
        self.subject_id = path.subject_id
        self.beacon_id = path.beacon_id
        self.speed = path.speed
        pauses = list(path.pauses) + [0.0] * (len(path.waypoints) - len(path.pauses))
        segs: list[_Segment] = []
        t = 0.0
        for i, wp in enumerate(path.waypoints):
            if pauses[i] > 0:
                segs.append(_Segment(t, t + pauses[i], wp, wp, moving=False))
                t += pauses[i]
            if i + 1 < len(path.waypoints):
                nxt = path.waypoints[i + 1]
                hop = euclidean_distance(wp, nxt)
                if hop > 0:
                    segs.append(_Segment(t, t + hop / path.speed, wp, nxt, moving=True))
                    t += hop / path.speed
        self._segments = segs
        self._starts = [s.t_start for s in segs]
        self.path_end = t
        self._last = path.waypoints[-1]

    def _segment_at(self, t: float) -> _Segment | None:
        i = bisect_right(self._starts, t) - 1
        if i < 0:
            return self._segments[0] if self._segments else None
        seg = self._segments[i]
        return seg if t <= seg.t_end else None

    def position(self, t: float) -> Position2D:
        if not self._segments or t <= 0:
            return self._segments[0].p_start if self._segments else self._last
        seg = self._segment_at(t)
        if seg is None:
            return self._last
        if not seg.moving or seg.t_end == seg.t_start:
            return seg.p_start
        f = (t - seg.t_start) / (seg.t_end - seg.t_start)
        return Position2D(
            seg.p_start.x + f * (seg.p_end.x - seg.p_start.x),
            seg.p_start.y + f * (seg.p_end.y - seg.p_start.y),
        )

    def motion(self, t: float) -> tuple[float, float | None]:
        """(speed, floor heading) at time t; heading is None while standing."""
        seg = self._segment_at(t)
        if seg is None or not seg.moving:
            return 0.0, None
        return self.speed, math.atan2(
            seg.p_end.y - seg.p_start.y, seg.p_end.x - seg.p_start.x
        )


@dataclass(frozen=True)
class TruthRecord:
    timestamp: float
    position: Position2D
    room: str | None


class GroundTruth:
    """Per-subject truth tracks plus 1 Hz sampled records with room labels."""

    def __init__(self, config: SimulationConfig):
        self.duration_s = config.duration_s
        self.plan = config.plan
        self.tracks = {p.subject_id: TruthTrack(p) for p in config.subjects}

    def subject_ids(self) -> list[str]:
        return list(self.tracks)

    def position(self, subject_id: str, t: float) -> Position2D:
        return self.tracks[subject_id].position(t)

    def records(self, subject_id: str, rate: float = 1.0) -> list[TruthRecord]:
        track = self.tracks[subject_id]
        out = []
        for k in range(int(self.duration_s * rate) + 1):
            t = k / rate
            p = track.position(t)
            out.append(TruthRecord(t, p, point_in_room(self.plan, p)))
        return out


def build_ground_truth(config: SimulationConfig) -> GroundTruth:
    return GroundTruth(config)


def simulate_ble(config: SimulationConfig, truth: GroundTruth) -> list[RssiHit]:
    """Synthesize the merged beacon-hit stream for all subjects.

    At each scan instant every in-range receiver detects the beacon with
    probability 1 - dropout_prob and reports rssi = pathloss(d) + noise.
    Bit-identical under a fixed config.
    """
    n_scans = round(config.duration_s * config.ble_rate)
    scan_times = np.arange(n_scans) / config.ble_rate
    device_ids = config.devices.ids()
    hits: list[RssiHit] = []

    for subject in config.subjects:
        track = truth.tracks[subject.subject_id]
        pos = np.array([track.position(t).as_tuple() for t in scan_times])
        for dev in device_ids:
            entry = config.devices[dev]
            rng = _substream(config.seed, _CHANNEL_BLE, subject.subject_id, dev)
            u = rng.random(n_scans)
            noise = (
                rng.normal(0.0, config.rssi_noise_sigma, n_scans)
                if config.rssi_noise_sigma > 0
                else np.zeros(n_scans)
            )
            d = np.hypot(pos[:, 0] - entry.position.x, pos[:, 1] - entry.position.y)
            detected = (d <= config.detection_range) & (u >= config.dropout_prob)
            bias = config.device_bias.get(dev, 0.0)
            for k in np.flatnonzero(detected):
                rssi = (
                    distance_to_rssi(entry.params, max(d[k], MIN_CHANNEL_DISTANCE_M))
                    + noise[k]
                    + bias
                )
                hits.append(
                    RssiHit(subject.beacon_id, dev, float(scan_times[k]), float(rssi))
                )

    hits.sort(key=lambda h: (h.timestamp, h.device_id, h.beacon_id))
    return hits


def simulate_imu(config: SimulationConfig, truth: GroundTruth) -> dict[str, list[ImuSample]]:
    """Synthesize per-subject IMU streams consistent with the ground truth.

    Vertical acceleration carries one sinusoid cycle per step while walking
    (cadence = speed / step_length); the gyro z-axis carries the rate-limited
    heading slew; the magnetometer is the dipping north field rotated into
    the body frame. Gaussian sensor noise on all channels.
    """
    dt = 1.0 / config.imu_rate
    n = round(config.duration_s * config.imu_rate)
    streams: dict[str, list[ImuSample]] = {}

    b_earth = np.array([math.cos(config.mag_dip), 0.0, -math.sin(config.mag_dip)])

    for subject in config.subjects:
        track = truth.tracks[subject.subject_id]
        rng = _substream(config.seed, _CHANNEL_IMU, subject.subject_id)
        accel_noise = rng.normal(0.0, config.accel_noise, (n, 3))
        gyro_noise = rng.normal(0.0, config.gyro_noise, (n, 3))
        mag_noise = rng.normal(0.0, config.mag_noise, (n, 3))

        # initial facing = first movement direction, default east
        psi = -math.pi / 2.0
        for seg in track._segments:
            if seg.moving:
                psi = (
                    math.atan2(seg.p_end.y - seg.p_start.y, seg.p_end.x - seg.p_start.x)
                    - math.pi / 2.0
                )
                break

        samples: list[ImuSample] = []
        phase = 0.0
        for k in range(n):
            t = k * dt
            speed, heading = track.motion(t)
            if heading is not None:
                target = heading - math.pi / 2.0
                err = (target - psi + math.pi) % (2.0 * math.pi) - math.pi
                max_slew = config.turn_rate * dt
                psi += max(-max_slew, min(max_slew, err))
            gyro_z = 0.0
            if k > 0:
                gyro_z = ((psi - prev_psi + math.pi) % (2.0 * math.pi) - math.pi) / dt
            prev_psi = psi

            if speed > 0:
                phase += 2.0 * math.pi * (speed / subject.step_length) * dt
                a_vert = config.gait_amplitude * math.sin(phase)
            else:
                a_vert = 0.0

            c, s = math.cos(psi), math.sin(psi)
            # world->body for a z-rotation: gravity stays on z, field rotates in-plane
            mag = np.array(
                [
                    c * b_earth[0] + s * b_earth[1],
                    -s * b_earth[0] + c * b_earth[1],
                    b_earth[2],
                ]
            )
            accel = np.array([0.0, 0.0, GRAVITY + a_vert]) + accel_noise[k]
            gyro = np.array([0.0, 0.0, gyro_z]) + gyro_noise[k]
            mag = mag + mag_noise[k]
            mag = mag / np.linalg.norm(mag)
            samples.append(
                ImuSample(
                    round(t, 9),
                    (float(accel[0]), float(accel[1]), float(accel[2])),
                    (float(gyro[0]), float(gyro[1]), float(gyro[2])),
                    (float(mag[0]), float(mag[1]), float(mag[2])),
                )
            )
        streams[subject.subject_id] = samples
    return streams


@dataclass(frozen=True)
class ProbeResult:
    """Signal-reception metrics for one stationary probe location."""

    position: Position2D
    hit_count: int
    unique_devices: int
    mean_rssi: float | None  # None when no hits were received


def simulate_coverage_probe(
    config: SimulationConfig,
    probe_points: list[Position2D],
    dwell: float,
) -> list[ProbeResult]:
    """Dwell a stationary beacon at each probe point and aggregate reception."""
    if not dwell > 0:
        raise BletrackError(f"dwell must be > 0, got {dwell}")
    n_scans = round(dwell * config.ble_rate)
    device_ids = config.devices.ids()
    results = []
    for idx, p in enumerate(probe_points):
        total = 0
        devices_with_hits = 0
        rssi_sum = 0.0
        for dev in device_ids:
            entry = config.devices[dev]
            d = euclidean_distance(p, entry.position)
            if d > config.detection_range:
                continue
            rng = _substream(config.seed, _CHANNEL_PROBE, idx, dev)
            u = rng.random(n_scans)
            noise = (
                rng.normal(0.0, config.rssi_noise_sigma, n_scans)
                if config.rssi_noise_sigma > 0
                else np.zeros(n_scans)
            )
            base = distance_to_rssi(entry.params, max(d, MIN_CHANNEL_DISTANCE_M))
            base += config.device_bias.get(dev, 0.0)
            mask = u >= config.dropout_prob
            count = int(mask.sum())
            if count:
                devices_with_hits += 1
                total += count
                rssi_sum += float((base + noise[mask]).sum())
        results.append(
            ProbeResult(p, total, devices_with_hits, rssi_sum / total if total else None)
        )
    return results
