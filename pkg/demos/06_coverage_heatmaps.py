"""
Signal-coverage survey and heatmaps
===================================

Dwell a probe beacon at ~131 equally spaced locations, aggregate hits,
unique receivers, and mean RSSI per location, and interpolate the metrics
onto a grid (inverse distance weighting). Dense regions collect more hits
and stronger signal; that disparity is what breaks instantaneous
trilateration in the sparse areas.
"""

from pathlib import Path

import numpy as np

from bletrack import coverage_heatmap, point_in_room, simulate_coverage_probe
from bletrack.evaluation import grid_to_csv, grid_to_pgm
from bletrack.layouts import benchmark_config, probe_grid

config = benchmark_config()
points = probe_grid(config.plan, target_count=131)
print(f"probing {len(points)} locations, 30 s dwell each (simulated)")
probes = simulate_coverage_probe(config, points, dwell=30.0)

for room in config.plan.room_names():
    sel = [p for p in probes if point_in_room(config.plan, p.position) == room]
    hits = np.mean([p.hit_count for p in sel])
    rssi = np.mean([p.mean_rssi for p in sel if p.mean_rssi is not None])
    devs = np.mean([p.unique_devices for p in sel])
    print(f"  {room:15s} hits/probe={hits:6.1f}  receivers={devs:4.1f}  "
          f"mean RSSI={rssi:6.1f} dB")

grid = coverage_heatmap(probes, config.plan, spacing=1.0)
out = Path("demos/output")
out.mkdir(parents=True, exist_ok=True)
for metric in ("hit_count", "unique_devices", "mean_rssi"):
    (out / f"coverage_{metric}.csv").write_text(grid_to_csv(grid, metric))
    (out / f"coverage_{metric}.pgm").write_bytes(grid_to_pgm(grid, metric))
print(f"\nwrote grids and PGM images to {out}/")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; PGM images still show the maps")
else:
    fig, axes = plt.subplots(1, 3, figsize=(11, 6))
    for ax, metric in zip(axes, ("hit_count", "unique_devices", "mean_rssi")):
        arr = grid.metric(metric)
        im = ax.imshow(arr, origin="lower", cmap="viridis",
                       extent=(0, config.plan.site_width, 0, config.plan.site_height))
        ax.set_title(metric.replace("_", " "), fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.7)
    fig.savefig(out / "coverage_heatmaps.png", dpi=130, bbox_inches="tight")
    print("wrote demos/output/coverage_heatmaps.png")
