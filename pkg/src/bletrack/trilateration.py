"""Baseline trilateration and hit-density-weighted adaptive trilateration.

The adaptive method aggregates beacon detections per receiver over a sliding
time window (default 10 s), then places the beacon at the weighted centroid
of all pairwise receiver midpoints m_ij = (h_i*p_i + h_j*p_j) / (h_i + h_j),
each pair weighted by its combined hit count w_ij = h_i + h_j. The baseline
converts per-scan RSSI readings to distances and solves the nonlinear
least-squares position, which requires at least three concurrent detections.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyWindowError, UnsortedInputError
from .geometry import Position2D
from .pathloss import RssiHit, rssi_to_distance
from .registry import DeviceRegistry

DEFAULT_WINDOW_S = 10.0  # lookback found sufficient for meaningful hit counts
DEFAULT_STRIDE_S = 1.0
DEFAULT_RSSI_FLOOR_DB = -95.0
REORDER_TOLERANCE_S = 0.1

GN_MAX_ITER = 50
GN_STEP_TOL_M = 1e-6


@dataclass(frozen=True)
class DeviceWindowStats:
    hit_count: int
    mean_rssi: float


@dataclass(frozen=True)
class HitWindow:
    """Per-receiver hit counts and mean RSSI for one beacon over one window."""

    beacon_id: str
    window_end: float
    duration: float
    per_device: dict[str, DeviceWindowStats] = field(default_factory=dict)

    @property
    def total_hits(self) -> int:
        return sum(s.hit_count for s in self.per_device.values())


@dataclass(frozen=True)
class BleFix:
    """One estimated beacon position derived from BLE hits alone."""

    beacon_id: str
    timestamp: float
    position: Position2D
    device_count: int
    total_hits: int
    flags: tuple[str, ...] = ()


def build_windows(
    hits: Sequence[RssiHit],
    duration: float = DEFAULT_WINDOW_S,
    stride: float = DEFAULT_STRIDE_S,
    *,
    rssi_floor: float | None = DEFAULT_RSSI_FLOOR_DB,
    tumbling: bool = False,
) -> dict[str, list[HitWindow]]:
    """Aggregate time-ordered hits into per-beacon sliding windows.

    Windows cover [start, start + duration) with starts aligned to each
    beacon's first hit and advanced by `stride` (or by `duration` when
    `tumbling`); only windows containing at least one hit are emitted.
    Hits weaker than `rssi_floor` are discarded before windowing. Raises
    UnsortedInputError when input timestamps regress by more than 100 ms.
    """
    if not duration > 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if not stride > 0:
        raise ValueError(f"stride must be > 0, got {stride}")
    if tumbling:
        stride = duration

    running_max = -math.inf
    per_beacon: dict[str, list[RssiHit]] = {}
    for hit in hits:
        if hit.timestamp < running_max - REORDER_TOLERANCE_S:
            raise UnsortedInputError(
                f"timestamp {hit.timestamp} regresses more than "
                f"{REORDER_TOLERANCE_S}s behind {running_max}"
            )
        running_max = max(running_max, hit.timestamp)
        if rssi_floor is not None and hit.rssi < rssi_floor:
            continue
        per_beacon.setdefault(hit.beacon_id, []).append(hit)

    windows: dict[str, list[HitWindow]] = {}
    for beacon_id, beacon_hits in per_beacon.items():
        beacon_hits.sort(key=lambda h: h.timestamp)
        times = [h.timestamp for h in beacon_hits]
        t0, t_last = times[0], times[-1]
        out: list[HitWindow] = []
        k = 0
        while True:
            start = t0 + k * stride
            if start > t_last:
                break
            lo = bisect_left(times, start)
            hi = bisect_left(times, start + duration)
            if hi > lo:
                counts: dict[str, int] = {}
                rssi_sums: dict[str, float] = {}
                for h in beacon_hits[lo:hi]:
                    counts[h.device_id] = counts.get(h.device_id, 0) + 1
                    rssi_sums[h.device_id] = rssi_sums.get(h.device_id, 0.0) + h.rssi
                per_device = {
                    dev: DeviceWindowStats(counts[dev], rssi_sums[dev] / counts[dev])
                    for dev in sorted(counts)
                }
                out.append(
                    HitWindow(beacon_id, start + duration, duration, per_device)
                )
            k += 1
        windows[beacon_id] = out
    return windows


def adaptive_trilaterate(window: HitWindow, registry: DeviceRegistry) -> BleFix:
    """Position a beacon from one hit window via pairwise hit-weighted midpoints.

    For n >= 2 receivers the estimate is the w_ij-weighted centroid of all
    pairwise midpoints; for a single receiver it degenerates to that
    receiver's position. The result always lies in the convex hull of the
    contributing receiver positions.
    """
    device_ids = sorted(window.per_device)
    if not device_ids:
        raise EmptyWindowError(f"window at {window.window_end} has no devices")

    positions = [registry.position_of(dev) for dev in device_ids]
    hits = [window.per_device[dev].hit_count for dev in device_ids]
    n = len(device_ids)

    if n == 1:
        pos = positions[0]
    else:
        acc_x = acc_y = acc_w = 0.0
        for i in range(n):
            hi, pi = hits[i], positions[i]
            for j in range(i + 1, n):
                hj, pj = hits[j], positions[j]
                w = hi + hj
                mx = (hi * pi.x + hj * pj.x) / w
                my = (hi * pi.y + hj * pj.y) / w
                acc_x += w * mx
                acc_y += w * my
                acc_w += w
        pos = Position2D(acc_x / acc_w, acc_y / acc_w)

    return BleFix(
        beacon_id=window.beacon_id,
        timestamp=window.window_end,
        position=pos,
        device_count=n,
        total_hits=sum(hits),
    )


def _is_collinear(anchors: np.ndarray) -> bool:
    centered = anchors - anchors.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[1] <= 1e-9 * max(s[0], 1.0)


def _linear_init(anchors: np.ndarray, dists: np.ndarray) -> np.ndarray | None:
    """Closed-form multilateration start by differencing the range equations.

    Subtracting ||x - p_i||^2 = d_i^2 pairwise removes the quadratic term,
    leaving a linear system that is exact on noiseless ranges. Returns None
    when the system is too ill-conditioned to trust (collinear anchors)."""
    a = 2.0 * (anchors[1:] - anchors[0])
    norms = (anchors**2).sum(axis=1)
    b = (dists[0] ** 2 - dists[1:] ** 2) + (norms[1:] - norms[0])
    sol, _, rank, sv = np.linalg.lstsq(a, b, rcond=None)
    if rank < 2 or sv[-1] < 1e-9 * max(sv[0], 1.0):
        return None
    return sol


def baseline_trilaterate(
    concurrent_hits: Sequence[RssiHit],
    registry: DeviceRegistry,
    *,
    max_iter: int = GN_MAX_ITER,
    step_tol: float = GN_STEP_TOL_M,
) -> BleFix | None:
    """Standard trilateration over the detections of a single scan instant.

    Each RSSI is converted to a distance via the path-loss law, then the
    position minimizing sum((||p - p_i|| - d_i)**2) is found by Gauss-Newton,
    started from the linearized range-difference solution (hit-weighted
    centroid when the anchors are too degenerate to linearize). Returns None
    with fewer than three distinct receivers (under-determined); flags
    "collinear" for degenerate anchor geometry and "non-convergence" when
    the step tolerance was not reached (the best iterate is still returned).
    """
    if not concurrent_hits:
        return None
    beacon_id = concurrent_hits[0].beacon_id

    rssi_sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for h in concurrent_hits:
        rssi_sums[h.device_id] = rssi_sums.get(h.device_id, 0.0) + h.rssi
        counts[h.device_id] = counts.get(h.device_id, 0) + 1
    device_ids = sorted(counts)
    if len(device_ids) < 3:
        return None

    anchors = np.array(
        [registry.position_of(dev).as_tuple() for dev in device_ids], dtype=float
    )
    dists = np.array(
        [
            rssi_to_distance(registry.params_of(dev), rssi_sums[dev] / counts[dev])
            for dev in device_ids
        ]
    )
    weights = np.array([counts[dev] for dev in device_ids], dtype=float)

    flags: list[str] = []
    if _is_collinear(anchors):
        flags.append("collinear")

    p = _linear_init(anchors, dists)
    if p is None:
        p = (anchors * weights[:, None]).sum(axis=0) / weights.sum()
    best_p = p
    best_cost = math.inf
    converged = False
    for _ in range(max_iter):
        diff = p - anchors
        norms = np.maximum(np.linalg.norm(diff, axis=1), 1e-12)
        residual = norms - dists
        cost = float(residual @ residual)
        if cost < best_cost:
            best_cost = cost
            best_p = p
        jac = diff / norms[:, None]
        step, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        p = p + step
        if float(np.linalg.norm(step)) < step_tol:
            diff = p - anchors
            norms = np.maximum(np.linalg.norm(diff, axis=1), 1e-12)
            final_cost = float((norms - dists) @ (norms - dists))
            if final_cost < best_cost:
                best_cost = final_cost
                best_p = p
            converged = True
            break
    if not converged:
        flags.append("non-convergence")

    return BleFix(
        beacon_id=beacon_id,
        timestamp=max(h.timestamp for h in concurrent_hits),
        position=Position2D(float(best_p[0]), float(best_p[1])),
        device_count=len(device_ids),
        total_hits=len(concurrent_hits),
        flags=tuple(flags),
    )


def adaptive_track(
    hits: Sequence[RssiHit],
    registry: DeviceRegistry,
    duration: float = DEFAULT_WINDOW_S,
    stride: float = DEFAULT_STRIDE_S,
    *,
    rssi_floor: float | None = DEFAULT_RSSI_FLOOR_DB,
    tumbling: bool = False,
) -> dict[str, list[BleFix]]:
    """Adaptive fixes for every beacon found in a time-ordered hit stream."""
    windows = build_windows(
        hits, duration, stride, rssi_floor=rssi_floor, tumbling=tumbling
    )
    return {
        beacon: [adaptive_trilaterate(w, registry) for w in beacon_windows]
        for beacon, beacon_windows in windows.items()
    }


def baseline_track(
    hits: Iterable[RssiHit],
    registry: DeviceRegistry,
    ble_rate: float = 2.0,
) -> dict[str, list[BleFix]]:
    """Baseline fixes per beacon, grouping hits into 1/ble_rate scan slots.

    Scan instants with fewer than three distinct receivers yield no fix,
    mirroring how missing detections starve instantaneous trilateration.
    """
    slots: dict[str, dict[int, list[RssiHit]]] = {}
    for h in hits:
        slot = round(h.timestamp * ble_rate)
        slots.setdefault(h.beacon_id, {}).setdefault(slot, []).append(h)

    tracks: dict[str, list[BleFix]] = {}
    for beacon_id, by_slot in slots.items():
        fixes = []
        for slot in sorted(by_slot):
            fix = baseline_trilaterate(by_slot[slot], registry)
            if fix is not None:
                fixes.append(fix)
        tracks[beacon_id] = fixes
    return tracks
