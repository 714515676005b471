"""Metrics and reporting: positioning error, room accuracy, coverage, comparisons.

Fixes are matched to ground truth by nearest timestamp within a tolerance
(default 1 s — truth is annotated coarsely, so finer interpolation would be
false precision). Room-level accuracy counts only fixes whose truth lies
inside a named region.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .deadreckoning import PdrConfig, dead_reckon, integrate_trajectory
from .errors import BletrackError, NoOverlapError, NoRegionSamplesError
from .fusion import FusedTrack, run_tracker
from .geometry import FloorPlan, Position2D, euclidean_distance, point_in_room
from .ingest import SessionBundle
from .registry import DeviceRegistry
from .simulator import ProbeResult, TruthRecord
from .trilateration import adaptive_track, baseline_track

DEFAULT_MATCH_TOLERANCE_S = 1.0
IDW_POWER = 2.0
CUTOFF_FACTOR = 2.0  # cells farther than 2x median probe spacing are absent


def _fix_list(track) -> list:
    return list(track.fixes) if isinstance(track, FusedTrack) else list(track)


def match_fixes(
    track,
    truth: Sequence[TruthRecord],
    match_tolerance: float = DEFAULT_MATCH_TOLERANCE_S,
) -> tuple[list[tuple[object, TruthRecord]], int]:
    """Pair each fix with the nearest-in-time truth record within tolerance.

    Returns (matched pairs, excluded count)."""
    fixes = _fix_list(track)
    times = [r.timestamp for r in truth]
    pairs = []
    excluded = 0
    for fix in fixes:
        i = bisect_left(times, fix.timestamp)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(times):
                dt = abs(times[j] - fix.timestamp)
                if best is None or dt < best[0]:
                    best = (dt, j)
        if best is not None and best[0] <= match_tolerance + 1e-9:
            pairs.append((fix, truth[best[1]]))
        else:
            excluded += 1
    return pairs, excluded


@dataclass(frozen=True)
class PositioningError:
    errors: tuple[float, ...]
    mean: float
    matched: int
    excluded: int


def positioning_error(
    track,
    truth: Sequence[TruthRecord],
    match_tolerance: float = DEFAULT_MATCH_TOLERANCE_S,
) -> PositioningError:
    """Euclidean error per matched fix plus the mean over matched fixes."""
    pairs, excluded = match_fixes(track, truth, match_tolerance)
    if not pairs:
        raise NoOverlapError("no fix matched any ground-truth sample")
    errors = tuple(euclidean_distance(f.position, r.position) for f, r in pairs)
    return PositioningError(errors, sum(errors) / len(errors), len(errors), excluded)


def room_accuracy(
    track,
    truth: Sequence[TruthRecord],
    plan: FloorPlan,
    match_tolerance: float = DEFAULT_MATCH_TOLERANCE_S,
) -> float:
    """Percentage of matched fixes predicting the region the subject was in.

    Only fixes whose truth position lies inside a named region enter the
    denominator."""
    pairs, _ = match_fixes(track, truth, match_tolerance)
    total = 0
    correct = 0
    for fix, rec in pairs:
        if rec.room is None:
            continue
        total += 1
        if point_in_room(plan, fix.position) == rec.room:
            correct += 1
    if total == 0:
        raise NoRegionSamplesError("ground truth never inside a named region")
    return 100.0 * correct / total


# ---------------------------------------------------------------- coverage

@dataclass(frozen=True)
class CoverageGrid:
    """Interpolated reception metrics on a regular grid over the site.

    Arrays are indexed [iy, ix]; cell (ix, iy) is centered at
    ((ix + 0.5) * spacing, (iy + 0.5) * spacing). NaN marks absent cells."""

    spacing: float
    nx: int
    ny: int
    hit_count: np.ndarray
    unique_devices: np.ndarray
    mean_rssi: np.ndarray

    def cell_center(self, ix: int, iy: int) -> Position2D:
        return Position2D((ix + 0.5) * self.spacing, (iy + 0.5) * self.spacing)

    def metric(self, name: str) -> np.ndarray:
        try:
            return getattr(self, name)
        except AttributeError:
            raise BletrackError(f"unknown coverage metric {name!r}") from None


def _idw(
    cx: np.ndarray,
    cy: np.ndarray,
    px: np.ndarray,
    py: np.ndarray,
    values: np.ndarray,
    cutoff: float,
) -> np.ndarray:
    """Inverse-distance-weighted (power 2) interpolation onto cell centers."""
    out = np.full(cx.shape, np.nan)
    if px.size == 0:
        return out
    d2 = (cx[..., None] - px) ** 2 + (cy[..., None] - py) ** 2
    dmin = np.sqrt(d2.min(axis=-1))
    exact = d2 < 1e-20
    with np.errstate(divide="ignore", invalid="ignore"):
        w = 1.0 / d2 ** (IDW_POWER / 2.0)
        hit_exact = exact.any(axis=-1)
        w_masked = np.where(np.isfinite(w), w, 0.0)
        interp = (w_masked * values).sum(axis=-1) / w_masked.sum(axis=-1)
    exact_idx = np.argmax(exact, axis=-1)
    out = np.where(hit_exact, values[exact_idx], interp)
    out[dmin > cutoff] = np.nan
    return out


def coverage_heatmap(
    probes: Sequence[ProbeResult],
    plan: FloorPlan,
    spacing: float,
) -> CoverageGrid:
    """Interpolate probe metrics onto a grid covering the site bounds.

    Cells farther than twice the median probe spacing from every probe are
    marked absent; interpolated values never exceed the probe min/max."""
    if not probes:
        raise BletrackError("need at least one probe result")
    if not spacing > 0:
        raise BletrackError(f"spacing must be > 0, got {spacing}")
    nx = max(1, math.ceil(plan.site_width / spacing))
    ny = max(1, math.ceil(plan.site_height / spacing))
    cx, cy = np.meshgrid(
        (np.arange(nx) + 0.5) * spacing, (np.arange(ny) + 0.5) * spacing
    )

    px = np.array([p.position.x for p in probes])
    py = np.array([p.position.y for p in probes])
    if len(probes) >= 2:
        d = np.hypot(px[:, None] - px, py[:, None] - py)
        np.fill_diagonal(d, np.inf)
        cutoff = CUTOFF_FACTOR * float(np.median(d.min(axis=1)))
    else:
        cutoff = math.inf

    hit_count = _idw(cx, cy, px, py, np.array([p.hit_count for p in probes], float), cutoff)
    unique = _idw(cx, cy, px, py, np.array([p.unique_devices for p in probes], float), cutoff)

    has_rssi = [p.mean_rssi is not None for p in probes]
    if any(has_rssi):
        rx = px[has_rssi]
        ry = py[has_rssi]
        rv = np.array([p.mean_rssi for p, ok in zip(probes, has_rssi) if ok])
        mean_rssi = _idw(cx, cy, rx, ry, rv, cutoff)
    else:
        mean_rssi = np.full(cx.shape, np.nan)

    return CoverageGrid(spacing, nx, ny, hit_count, unique, mean_rssi)


def grid_to_csv(grid: CoverageGrid, metric: str) -> str:
    """Raw grid values as CSV rows (south row first); absent cells are empty."""
    arr = grid.metric(metric)
    lines = []
    for iy in range(grid.ny):
        lines.append(
            ",".join(
                "" if math.isnan(arr[iy, ix]) else repr(float(arr[iy, ix]))
                for ix in range(grid.nx)
            )
        )
    return "\n".join(lines) + "\n"


def grid_to_pgm(grid: CoverageGrid, metric: str) -> bytes:
    """Binary PGM (P5) rendering: present cells scaled to 1..255, absent 0.

    The image row order is north-up (top row = highest y)."""
    arr = grid.metric(metric)
    finite = arr[np.isfinite(arr)]
    img = np.zeros((grid.ny, grid.nx), dtype=np.uint8)
    if finite.size:
        lo, hi = float(finite.min()), float(finite.max())
        span = hi - lo
        scaled = (
            np.ones_like(arr) * 128.0
            if span <= 0
            else 1.0 + 254.0 * (arr - lo) / span
        )
        mask = np.isfinite(arr)
        img[mask] = np.clip(scaled[mask], 1, 255).astype(np.uint8)
    img = img[::-1]  # north-up
    header = f"P5\n{grid.nx} {grid.ny}\n255\n".encode()
    return header + img.tobytes()


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class EvalConfig:
    window_s: float = 10.0
    stride_s: float = 1.0
    rssi_floor_db: float | None = -95.0
    tumbling: bool = False
    ble_rate: float = 2.0
    tick_s: float = 1.0
    match_tolerance_s: float = DEFAULT_MATCH_TOLERANCE_S
    pdr: PdrConfig = field(default_factory=PdrConfig)


@dataclass
class MethodReport:
    mean_error_m: float | None = None
    per_region_error_m: dict[str, float] = field(default_factory=dict)
    room_accuracy_pct: float | None = None
    availability_pct: float = 0.0
    matched_fixes: int = 0
    excluded_fixes: int = 0


@dataclass
class EvaluationReport:
    methods: dict[str, MethodReport]
    regions: list[str]

    METHOD_ORDER = ("baseline", "ble_only", "ble_imu")

    def to_dict(self) -> dict:
        return {
            "regions": self.regions,
            "methods": {
                name: {
                    "mean_error_m": m.mean_error_m,
                    "per_region_error_m": m.per_region_error_m,
                    "room_accuracy_pct": m.room_accuracy_pct,
                    "availability_pct": m.availability_pct,
                    "matched_fixes": m.matched_fixes,
                    "excluded_fixes": m.excluded_fixes,
                }
                for name, m in self.methods.items()
            },
        }

    def to_table(self) -> str:
        names = [n for n in self.METHOD_ORDER if n in self.methods]
        rows: list[tuple[str, list[str]]] = []

        def fmt(v, suffix=""):
            return "-" if v is None else f"{v:.2f}{suffix}"

        rows.append(("mean error (m)", [fmt(self.methods[n].mean_error_m) for n in names]))
        for region in self.regions:
            rows.append(
                (
                    f"  {region} (m)",
                    [fmt(self.methods[n].per_region_error_m.get(region)) for n in names],
                )
            )
        rows.append(("room accuracy (%)", [fmt(self.methods[n].room_accuracy_pct) for n in names]))
        rows.append(("availability (%)", [fmt(self.methods[n].availability_pct) for n in names]))
        rows.append(("matched fixes", [str(self.methods[n].matched_fixes) for n in names]))

        label_w = max(len(r[0]) for r in rows)
        col_w = [max(len(n), max(len(r[1][i]) for r in rows)) for i, n in enumerate(names)]
        lines = [
            " " * label_w + "  " + "  ".join(n.rjust(col_w[i]) for i, n in enumerate(names))
        ]
        for label, cells in rows:
            lines.append(
                label.ljust(label_w) + "  "
                + "  ".join(c.rjust(col_w[i]) for i, c in enumerate(cells))
            )
        return "\n".join(lines)


def _availability(tracks_fixes: list, truth: Sequence[TruthRecord], tick: float) -> tuple[int, int]:
    """(covered ticks, total ticks) — a tick counts when a fix lies within
    half a tick of it."""
    times = [r.timestamp for r in truth]
    covered = [False] * len(times)
    for fix in tracks_fixes:
        i = bisect_left(times, fix.timestamp)
        for j in (i - 1, i):
            if 0 <= j < len(times) and abs(times[j] - fix.timestamp) <= tick / 2 + 1e-9:
                covered[j] = True
    return sum(covered), len(times)


def compare_methods(
    bundle: SessionBundle,
    registry: DeviceRegistry,
    plan: FloorPlan,
    truth: dict[str, list[TruthRecord]],
    config: EvalConfig = EvalConfig(),
) -> EvaluationReport:
    """Run baseline, adaptive BLE-only, and BLE+IMU pipelines on one bundle.

    All three see identical inputs; metrics are pooled across subjects."""
    per_method_fixes: dict[str, list[tuple[list, list[TruthRecord]]]] = {
        "baseline": [],
        "ble_only": [],
        "ble_imu": [],
    }

    for beacon_id in bundle.beacon_ids():
        hits = bundle.hits[beacon_id]
        subject_id = bundle.subject_of(beacon_id)
        truth_records = truth[subject_id]

        base = baseline_track(hits, registry, config.ble_rate).get(beacon_id, [])
        adaptive = adaptive_track(
            hits,
            registry,
            config.window_s,
            config.stride_s,
            rssi_floor=config.rssi_floor_db,
            tumbling=config.tumbling,
        ).get(beacon_id, [])

        per_method_fixes["baseline"].append((base, truth_records))
        per_method_fixes["ble_only"].append((adaptive, truth_records))

        if adaptive:
            steps = dead_reckon(bundle.imu.get(subject_id, []), config.pdr)
            trajectory = integrate_trajectory(steps)
            first = adaptive[0]
            fused = run_tracker(
                adaptive,
                trajectory,
                first.timestamp,
                first.position,
                tick=config.tick_s,
                t_end=truth_records[-1].timestamp if truth_records else None,
                beacon_id=beacon_id,
            )
            per_method_fixes["ble_imu"].append((list(fused.fixes), truth_records))
        else:
            per_method_fixes["ble_imu"].append(([], truth_records))

    regions = plan.room_names()
    methods: dict[str, MethodReport] = {}
    for name, tracks in per_method_fixes.items():
        report = MethodReport()
        all_errors: list[float] = []
        region_errors: dict[str, list[float]] = {r: [] for r in regions}
        room_total = 0
        room_correct = 0
        covered = 0
        total_ticks = 0
        for fixes, truth_records in tracks:
            c, t = _availability(fixes, truth_records, config.tick_s)
            covered += c
            total_ticks += t
            pairs, excluded = match_fixes(fixes, truth_records, config.match_tolerance_s)
            report.excluded_fixes += excluded
            for fix, rec in pairs:
                err = euclidean_distance(fix.position, rec.position)
                all_errors.append(err)
                if rec.room is not None:
                    region_errors[rec.room].append(err)
                    room_total += 1
                    if point_in_room(plan, fix.position) == rec.room:
                        room_correct += 1
        report.matched_fixes = len(all_errors)
        if all_errors:
            report.mean_error_m = sum(all_errors) / len(all_errors)
        report.per_region_error_m = {
            r: sum(v) / len(v) for r, v in region_errors.items() if v
        }
        if room_total:
            report.room_accuracy_pct = 100.0 * room_correct / room_total
        if total_ticks:
            report.availability_pct = 100.0 * covered / total_ticks
        methods[name] = report

    return EvaluationReport(methods, regions)


def with_pdr(config: EvalConfig, **kwargs) -> EvalConfig:
    """EvalConfig copy with PdrConfig fields replaced."""
    return replace(config, pdr=replace(config.pdr, **kwargs))
