"""
Path-loss model and exponent calibration
========================================

How RSSI maps to distance under the log-distance law, and how the
environmental exponent N is fitted from (distance, rssi) samples.
"""

import numpy as np

from bletrack import PathLossParams, calibrate_n, distance_to_rssi, rssi_to_distance

# The law: d = 10 ** ((m_rssi - i_rssi) / (10 * N)). At i_rssi == m_rssi the
# distance is exactly 1 m; every 10*N dB of extra attenuation is a decade.
params = PathLossParams(m_rssi=-70.0, n_factor=2.0)
print("RSSI -70 dB ->", rssi_to_distance(params, -70.0), "m")
print("RSSI -90 dB ->", rssi_to_distance(params, -90.0), "m")
print("RSSI -110 dB ->", rssi_to_distance(params, -110.0), "m")

# A harsher environment (larger N) compresses the same dB span into less range.
harsh = PathLossParams(m_rssi=-70.0, n_factor=4.0)
print("\nsame -90 dB reading, N=4:", round(rssi_to_distance(harsh, -90.0), 4), "m")

# Calibration: walk a tape measure away from one receiver, record RSSI,
# and fit N by least squares. With synthetic noise the fit stays close.
rng = np.random.default_rng(7)
true_n = 2.7
gen = PathLossParams(-70.0, true_n)
distances = rng.uniform(1.5, 25.0, 60)
samples = [(d, distance_to_rssi(gen, d) + rng.normal(0, 2.0)) for d in distances]
fitted = calibrate_n(-70.0, samples)
print(f"\ntrue N = {true_n}, fitted N = {fitted:.3f} from {len(samples)} noisy samples")

# The fit refuses to guess when every sample sits at the 1 m reference.
try:
    calibrate_n(-70.0, [(1.0, -70.5), (1.0, -69.5)])
except Exception as e:
    print("degenerate samples ->", type(e).__name__)

# Plot the family of curves if matplotlib is around.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping the plot")
else:
    import os

    rssi = np.linspace(-100, -60, 200)
    fig, ax = plt.subplots(figsize=(6, 4))
    for n in (1.5, 2.0, 3.0, 4.0):
        p = PathLossParams(-70.0, n)
        ax.plot(rssi, [rssi_to_distance(p, r) for r in rssi], label=f"N = {n}")
    ax.set_xlabel("measured RSSI (dB)")
    ax.set_ylabel("implied distance (m)")
    ax.set_title("log-distance path loss, 1 m RSSI = -70 dB")
    ax.legend()
    os.makedirs("demos/output", exist_ok=True)
    fig.savefig("demos/output/pathloss_curves.png", dpi=120, bbox_inches="tight")
    print("\nwrote demos/output/pathloss_curves.png")
