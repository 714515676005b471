"""
Adaptive (hit-density) vs baseline (instantaneous) trilateration
================================================================

The baseline needs three concurrent detections and trusts each RSSI as a
range; the adaptive method needs only hits accumulated over a 10 s window
and places the beacon at the hit-weighted centroid of pairwise receiver
midpoints. This script shows both on the same synthetic hit stream.
"""

import numpy as np

from bletrack import (
    DeviceEntry,
    DeviceRegistry,
    PathLossParams,
    Position2D,
    RssiHit,
    adaptive_track,
    baseline_track,
    distance_to_rssi,
    euclidean_distance,
)

rng = np.random.default_rng(42)
params = PathLossParams(-70.0, 2.0)
registry = DeviceRegistry(
    {
        "nw": DeviceEntry(Position2D(2.0, 18.0), params),
        "ne": DeviceEntry(Position2D(18.0, 18.0), params),
        "sw": DeviceEntry(Position2D(2.0, 2.0), params),
        "se": DeviceEntry(Position2D(18.0, 2.0), params),
    }
)
subject = Position2D(8.0, 11.0)

# One minute of 2 Hz scans with 4 dB noise and 40% dropout.
hits = []
for k in range(120):
    t = 0.5 * k
    for dev in registry.ids():
        if rng.random() < 0.4:
            continue
        d = euclidean_distance(subject, registry.position_of(dev))
        hits.append(RssiHit("tag", dev, t, distance_to_rssi(params, d) + rng.normal(0, 4.0)))
print(f"{len(hits)} hits survived dropout out of 480 scan opportunities")

baseline = baseline_track(hits, registry)["tag"]
adaptive = adaptive_track(hits, registry)["tag"]

def summarize(name, fixes):
    errs = [euclidean_distance(f.position, subject) for f in fixes]
    print(f"{name:9s} fixes={len(fixes):3d}  mean err={np.mean(errs):5.2f} m  "
          f"worst={np.max(errs):5.2f} m")

summarize("baseline", baseline)
summarize("adaptive", adaptive)

# The baseline's weakness is availability: scan slots with <3 detections
# produce nothing at all, and noisy ranges scatter the solved positions.
slots = 120
print(f"\nbaseline produced fixes for {len(baseline)}/{slots} scan slots;")
print("the adaptive window always has enough accumulated hits once warm.")

# Flags mark degenerate solves (collinear receivers, iteration cap).
flagged = [f for f in baseline if f.flags]
print(f"{len(flagged)} baseline fixes carry diagnostic flags")
