"""File formats, batch loading, and watermark-ordered streaming.

All on-disk formats are plain text (JSON for structured documents, CSV for
record streams) and are documented field-by-field in FORMATS.md. Writes are
atomic (write-then-rename).
"""

from __future__ import annotations

import heapq
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .deadreckoning import ImuSample
from .errors import BletrackError, EmptyBundleError, SchemaError
from .fusion import FusedTrack, TrackFix
from .geometry import FloorPlan, Position2D, RoomPolygon
from .pathloss import PathLossParams, RssiHit
from .registry import DeviceEntry, DeviceRegistry
from .simulator import SimulationConfig, SubjectPath, TruthRecord

REORDER_TOLERANCE_S = 0.1
DEFAULT_WATERMARK_S = 2.0  # below the trilateration window, so late data
                           # cannot silently alter closed windows

HITS_HEADER = "timestamp_s,device_id,beacon_id,rssi_db"
IMU_HEADER = "timestamp,ax,ay,az,gx,gy,gz,mx,my,mz"
TRUTH_HEADER = "timestamp_s,subject_id,x,y,room"
TRACK_HEADER = "timestamp_s,beacon_id,x,y,source"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- registry

def registry_to_dict(registry: DeviceRegistry) -> dict:
    return {
        "devices": [
            {
                "device_id": dev,
                "x": entry.position.x,
                "y": entry.position.y,
                "m_rssi": entry.params.m_rssi,
                "n_factor": entry.params.n_factor,
            }
            for dev, entry in sorted(registry.devices.items())
        ]
    }


def registry_from_dict(doc: dict) -> DeviceRegistry:
    devices = {}
    for rec in doc["devices"]:
        devices[rec["device_id"]] = DeviceEntry(
            Position2D(float(rec["x"]), float(rec["y"])),
            PathLossParams(float(rec["m_rssi"]), float(rec["n_factor"])),
        )
    return DeviceRegistry(devices)


def save_registry(path: str | Path, registry: DeviceRegistry) -> None:
    atomic_write_text(path, json.dumps(registry_to_dict(registry), indent=2, sort_keys=True) + "\n")


def load_registry(path: str | Path) -> DeviceRegistry:
    try:
        doc = json.loads(Path(path).read_text())
        return registry_from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"bad registry file: {e}", path=str(path)) from e


# ---------------------------------------------------------------- floor plan

def plan_to_dict(plan: FloorPlan) -> dict:
    return {
        "site_width": plan.site_width,
        "site_height": plan.site_height,
        "rooms": [
            {"name": r.name, "vertices": [[v.x, v.y] for v in r.vertices]}
            for r in plan.rooms
        ],
    }


def plan_from_dict(doc: dict) -> FloorPlan:
    rooms = [
        RoomPolygon(r["name"], [(float(x), float(y)) for x, y in r["vertices"]])
        for r in doc.get("rooms", [])
    ]
    return FloorPlan(float(doc["site_width"]), float(doc["site_height"]), rooms)


def save_plan(path: str | Path, plan: FloorPlan) -> None:
    atomic_write_text(path, json.dumps(plan_to_dict(plan), indent=2, sort_keys=True) + "\n")


def load_plan(path: str | Path) -> FloorPlan:
    try:
        return plan_from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"bad floor-plan file: {e}", path=str(path)) from e


# ---------------------------------------------------------------- scenario

def scenario_to_dict(config: SimulationConfig) -> dict:
    return {
        "seed": config.seed,
        "duration_s": config.duration_s,
        "ble_rate_hz": config.ble_rate,
        "imu_rate_hz": config.imu_rate,
        "rssi_noise_sigma_db": config.rssi_noise_sigma,
        "dropout_prob": config.dropout_prob,
        "detection_range_m": config.detection_range,
        "device_bias_db": dict(sorted(config.device_bias.items())),
        "accel_noise": config.accel_noise,
        "gyro_noise": config.gyro_noise,
        "mag_noise": config.mag_noise,
        "gait_amplitude": config.gait_amplitude,
        "turn_rate_rad_s": config.turn_rate,
        "mag_dip_rad": config.mag_dip,
        "plan": plan_to_dict(config.plan),
        "registry": registry_to_dict(config.devices),
        "subjects": [
            {
                "subject_id": s.subject_id,
                "beacon_id": s.beacon_id,
                "speed_mps": s.speed,
                "step_length_m": s.step_length,
                "waypoints": [[w.x, w.y] for w in s.waypoints],
                "pauses_s": list(s.pauses),
            }
            for s in config.subjects
        ],
    }


def scenario_from_dict(doc: dict) -> SimulationConfig:
    subjects = tuple(
        SubjectPath(
            subject_id=s["subject_id"],
            beacon_id=s["beacon_id"],
            waypoints=tuple(Position2D(float(x), float(y)) for x, y in s["waypoints"]),
            speed=float(s["speed_mps"]),
            pauses=tuple(float(p) for p in s.get("pauses_s", [])),
            step_length=float(s.get("step_length_m", 0.7)),
        )
        for s in doc["subjects"]
    )
    defaults = SimulationConfig(
        seed=0,
        plan=plan_from_dict(doc["plan"]),
        devices=registry_from_dict(doc["registry"]),
        subjects=subjects,
    )
    return SimulationConfig(
        seed=int(doc["seed"]),
        plan=defaults.plan,
        devices=defaults.devices,
        subjects=subjects,
        duration_s=float(doc.get("duration_s", 600.0)),
        ble_rate=float(doc.get("ble_rate_hz", 2.0)),
        imu_rate=float(doc.get("imu_rate_hz", 42.0)),
        rssi_noise_sigma=float(doc.get("rssi_noise_sigma_db", 4.0)),
        dropout_prob=float(doc.get("dropout_prob", 0.0)),
        detection_range=float(doc.get("detection_range_m", 15.0)),
        device_bias={k: float(v) for k, v in doc.get("device_bias_db", {}).items()},
        accel_noise=float(doc.get("accel_noise", 0.05)),
        gyro_noise=float(doc.get("gyro_noise", 0.005)),
        mag_noise=float(doc.get("mag_noise", 0.005)),
        gait_amplitude=float(doc.get("gait_amplitude", 1.5)),
        turn_rate=float(doc.get("turn_rate_rad_s", math.pi / 4)),
        mag_dip=float(doc.get("mag_dip_rad", math.radians(60.0))),
    )


def save_scenario(path: str | Path, config: SimulationConfig) -> None:
    atomic_write_text(path, json.dumps(scenario_to_dict(config), indent=2, sort_keys=True) + "\n")


def load_scenario(path: str | Path) -> SimulationConfig:
    try:
        return scenario_from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise SchemaError(f"bad scenario file: {e}", path=str(path)) from e


# ---------------------------------------------------------------- CSV streams

def save_hits(path: str | Path, hits: Sequence[RssiHit]) -> None:
    lines = [HITS_HEADER]
    lines += [
        f"{_fmt(h.timestamp)},{h.device_id},{h.beacon_id},{_fmt(h.rssi)}" for h in hits
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def parse_hit_line(line: str, offset: float = 0.0) -> RssiHit:
    parts = line.split(",")
    if len(parts) != 4:
        raise ValueError(f"expected 4 fields, got {len(parts)}")
    ts, device_id, beacon_id, rssi = parts
    return RssiHit(beacon_id.strip(), device_id.strip(), float(ts) + offset, float(rssi))


def save_imu(path: str | Path, samples: Sequence[ImuSample]) -> None:
    lines = [IMU_HEADER]
    for s in samples:
        vals = [s.timestamp, *s.accel, *s.gyro, *s.mag]
        lines.append(",".join(_fmt(v) for v in vals))
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_truth(path: str | Path, records: dict[str, list[TruthRecord]]) -> None:
    lines = [TRUTH_HEADER]
    for subject_id in sorted(records):
        for r in records[subject_id]:
            room = r.room if r.room is not None else ""
            lines.append(
                f"{_fmt(r.timestamp)},{subject_id},{_fmt(r.position.x)},{_fmt(r.position.y)},{room}"
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_truth(path: str | Path) -> dict[str, list[TruthRecord]]:
    records: dict[str, list[TruthRecord]] = {}
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != TRUTH_HEADER:
            raise SchemaError("bad truth header", path=str(path), line=1)
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise SchemaError("expected 5 fields", path=str(path), line=lineno)
            ts, sid, x, y, room = parts
            records.setdefault(sid, []).append(
                TruthRecord(float(ts), Position2D(float(x), float(y)), room or None)
            )
    for recs in records.values():
        recs.sort(key=lambda r: r.timestamp)
    return records


def save_track(path: str | Path, track: FusedTrack) -> None:
    lines = [TRACK_HEADER]
    for f in track.fixes:
        lines.append(
            f"{_fmt(f.timestamp)},{track.beacon_id},{_fmt(f.position.x)},{_fmt(f.position.y)},{f.source}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_track(path: str | Path) -> FusedTrack:
    fixes: list[TrackFix] = []
    beacon_id = ""
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != TRACK_HEADER:
            raise SchemaError("bad track header", path=str(path), line=1)
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise SchemaError("expected 5 fields", path=str(path), line=lineno)
            ts, beacon_id, x, y, source = parts
            fixes.append(TrackFix(float(ts), Position2D(float(x), float(y)), source))
    return FusedTrack(beacon_id, tuple(fixes))


# ---------------------------------------------------------------- bundles

@dataclass
class LoadStats:
    malformed: int = 0
    reordered: int = 0


@dataclass
class SessionBundle:
    """Everything one replay needs: sorted hits per beacon, sorted IMU
    samples per subject, and the beacon<->subject binding."""

    hits: dict[str, list[RssiHit]] = field(default_factory=dict)
    imu: dict[str, list[ImuSample]] = field(default_factory=dict)
    bindings: dict[str, str] = field(default_factory=dict)  # beacon_id -> subject_id
    stats: LoadStats = field(default_factory=LoadStats)
    meta: dict = field(default_factory=dict)

    def subject_of(self, beacon_id: str) -> str:
        return self.bindings[beacon_id]

    def beacon_ids(self) -> list[str]:
        return sorted(self.hits)

    def all_hits(self) -> list[RssiHit]:
        merged = [h for hits in self.hits.values() for h in hits]
        merged.sort(key=lambda h: (h.timestamp, h.device_id, h.beacon_id))
        return merged


def _read_hits_file(path: str | Path, offset: float, stats: LoadStats) -> list[RssiHit]:
    hits: list[RssiHit] = []
    running_max = -math.inf
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != HITS_HEADER:
            raise SchemaError("bad hits header", path=str(path), line=1)
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                hit = parse_hit_line(line, offset)
            except (ValueError, BletrackError):
                stats.malformed += 1
                continue
            if hit.timestamp < running_max - REORDER_TOLERANCE_S:
                stats.reordered += 1
            running_max = max(running_max, hit.timestamp)
            hits.append(hit)
    return hits


def _read_imu_file(path: str | Path, offset: float, stats: LoadStats) -> list[ImuSample]:
    samples: list[ImuSample] = []
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != IMU_HEADER:
            raise SchemaError("bad IMU header", path=str(path), line=1)
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 10:
                stats.malformed += 1
                continue
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                stats.malformed += 1
                continue
            samples.append(
                ImuSample(
                    vals[0] + offset,
                    (vals[1], vals[2], vals[3]),
                    (vals[4], vals[5], vals[6]),
                    (vals[7], vals[8], vals[9]),
                )
            )
    samples.sort(key=lambda s: s.timestamp)
    return samples


def load_bundle(
    hits_files: Sequence[str | Path],
    imu_files: dict[str, str | Path],
    bindings: dict[str, str],
    offsets: dict[str, float] | None = None,
) -> SessionBundle:
    """Batch-load hit and IMU logs into a sorted, partitioned bundle.

    `offsets` corrects constant clock skew per stream, keyed by the hits
    file's stem or by subject id. Unparseable records are skipped and
    counted; regressions beyond 100 ms are counted as reorder warnings
    (the output is fully sorted either way). Raises EmptyBundleError when
    nothing valid was read.
    """
    offsets = offsets or {}
    stats = LoadStats()
    bundle = SessionBundle(bindings=dict(bindings), stats=stats)

    for path in hits_files:
        stem = Path(path).stem
        for hit in _read_hits_file(path, offsets.get(stem, 0.0), stats):
            bundle.hits.setdefault(hit.beacon_id, []).append(hit)
    for beacon_hits in bundle.hits.values():
        beacon_hits.sort(key=lambda h: (h.timestamp, h.device_id))

    for subject_id, path in sorted(imu_files.items()):
        bundle.imu[subject_id] = _read_imu_file(
            path, offsets.get(subject_id, 0.0), stats
        )

    if not any(bundle.hits.values()) and not any(bundle.imu.values()):
        raise EmptyBundleError("no valid records in any input file")
    return bundle


def load_bundle_dir(directory: str | Path, offsets: dict[str, float] | None = None) -> SessionBundle:
    """Load the directory layout written by the `simulate` subcommand."""
    directory = Path(directory)
    meta_path = directory / "metadata.json"
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"bad metadata file: {e}", path=str(meta_path)) from e
    bindings = {b["beacon_id"]: b["subject_id"] for b in meta.get("bindings", [])}
    imu_files = {
        b["subject_id"]: directory / f"imu_{b['subject_id']}.csv"
        for b in meta.get("bindings", [])
        if (directory / f"imu_{b['subject_id']}.csv").exists()
    }
    bundle = load_bundle([directory / "hits.csv"], imu_files, bindings, offsets)
    bundle.meta = meta
    return bundle


# ---------------------------------------------------------------- streaming

class StreamFeed:
    """Incremental hit ingestion with bounded reordering.

    Buffers parsed hits per beacon and releases them in timestamp order once
    they age past the watermark relative to the newest record seen. Records
    arriving later than the watermark are dropped and counted; malformed
    lines are skipped and counted.
    """

    def __init__(self, watermark: float = DEFAULT_WATERMARK_S):
        self.watermark = watermark
        self.dropped = 0
        self.malformed = 0
        self._max_ts = -math.inf
        self._buffers: dict[str, list[tuple[float, int, RssiHit]]] = {}
        self._tie = 0

    def push(self, line: str) -> list[RssiHit]:
        try:
            hit = parse_hit_line(line)
        except (ValueError, BletrackError):
            self.malformed += 1
            return []
        if hit.timestamp < self._max_ts - self.watermark:
            self.dropped += 1
            return []
        self._max_ts = max(self._max_ts, hit.timestamp)
        self._tie += 1
        heapq.heappush(
            self._buffers.setdefault(hit.beacon_id, []), (hit.timestamp, self._tie, hit)
        )
        return self._release(self._max_ts - self.watermark)

    def _release(self, frontier: float) -> list[RssiHit]:
        out: list[RssiHit] = []
        for beacon in sorted(self._buffers):
            buf = self._buffers[beacon]
            while buf and buf[0][0] <= frontier:
                out.append(heapq.heappop(buf)[2])
        out.sort(key=lambda h: (h.timestamp, h.beacon_id, h.device_id))
        return out

    def close(self) -> list[RssiHit]:
        """Flush everything still buffered, in order."""
        return self._release(math.inf)


def stream_feed(
    lines: Iterable[str], watermark: float = DEFAULT_WATERMARK_S
) -> Iterator[RssiHit]:
    """Convenience generator over StreamFeed for a finite line source."""
    feed = StreamFeed(watermark)
    for line in lines:
        yield from feed.push(line)
    yield from feed.close()
