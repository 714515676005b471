"""Log-distance path-loss model: RSSI <-> distance and exponent calibration.

The governing law is d = 10 ** ((m_rssi - i_rssi) / (10 * n_factor)),
where m_rssi is the calibrated RSSI at 1 m and n_factor captures the
environment between transmitter and receiver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    BletrackError,
    CalibrationWarning,
    DegenerateSamplesError,
    InvalidDistanceError,
    InvalidParamsError,
)

DEFAULT_M_RSSI = -70.0  # manufacturer 1 m RSSI, dB
N_FACTOR_RANGE = (1.5, 6.0)  # physically plausible exponent range


@dataclass(frozen=True)
class PathLossParams:
    """Per-device channel parameters: 1 m RSSI (dB) and environmental exponent."""

    m_rssi: float = DEFAULT_M_RSSI
    n_factor: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.m_rssi):
            raise InvalidParamsError(f"m_rssi must be finite, got {self.m_rssi}")
        if not (math.isfinite(self.n_factor) and self.n_factor > 0):
            raise InvalidParamsError(f"n_factor must be > 0, got {self.n_factor}")


@dataclass(frozen=True)
class RssiHit:
    """One detection of a beacon broadcast by one receiver."""

    beacon_id: str
    device_id: str
    timestamp: float  # seconds, monotonic epoch
    rssi: float  # dB

    def __post_init__(self):
        if not math.isfinite(self.rssi):
            raise BletrackError(f"rssi must be finite, got {self.rssi}")
        if not (math.isfinite(self.timestamp) and self.timestamp >= 0):
            raise BletrackError(f"timestamp must be >= 0, got {self.timestamp}")


def rssi_to_distance(params: PathLossParams, i_rssi: float) -> float:
    """Distance in meters implied by an instantaneous RSSI reading.

    Strictly decreasing in i_rssi; exactly 1.0 when i_rssi equals the 1 m RSSI.
    """
    return 10.0 ** ((params.m_rssi - i_rssi) / (10.0 * params.n_factor))


def distance_to_rssi(params: PathLossParams, d: float) -> float:
    """Exact inverse of rssi_to_distance; d must be strictly positive."""
    if not d > 0:
        raise InvalidDistanceError(f"distance must be > 0, got {d}")
    return params.m_rssi - 10.0 * params.n_factor * math.log10(d)


def calibrate_n(
    m_rssi: float,
    samples: Iterable[Sequence[float]],
    clamp: tuple[float, float] | None = N_FACTOR_RANGE,
) -> float:
    """Least-squares fit of the environmental exponent from (distance, rssi) pairs.

    Minimizes sum_k (rssi_k - (m_rssi - 10*N*log10(d_k)))**2, which has the
    closed form N = sum(a_k*b_k) / sum(a_k**2) with a_k = -10*log10(d_k) and
    b_k = rssi_k - m_rssi.

    Fits outside `clamp` are clamped with a CalibrationWarning (pass
    clamp=None to disable). Raises DegenerateSamplesError when every sample
    sits at 1 m (no information about N).
    """
    num = 0.0
    den = 0.0
    count = 0
    for d, rssi in samples:
        if not d > 0:
            raise InvalidDistanceError(f"sample distance must be > 0, got {d}")
        a = -10.0 * math.log10(d)
        b = rssi - m_rssi
        num += a * b
        den += a * a
        count += 1
    if count == 0 or den < 1e-24:
        raise DegenerateSamplesError(
            "all sample distances are 1 m; exponent is unidentifiable"
        )
    n = num / den
    if clamp is not None and not (clamp[0] <= n <= clamp[1]):
        warnings.warn(
            f"fitted n_factor {n:.3f} outside plausible range {clamp}; clamping",
            CalibrationWarning,
            stacklevel=2,
        )
        n = min(max(n, clamp[0]), clamp[1])
    return n
