"""IMU dead reckoning: filtering, step detection, orientation, trajectory.

Pipeline per subject: low-pass the accelerometer magnitude, remove the
rolling mean, count positive-going zero crossings as steps, track heading
with a gradient-corrected gyro-integration (Madgwick) orientation filter,
then chain step vectors length * (cos heading, sin heading) into a
relative trajectory that can be queried over arbitrary intervals.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import butter, lfilter, lfilter_zi

from .errors import GimbalLockWarning, InvalidCutoffError, ReversedIntervalError

DEFAULT_BETA = 0.1  # reference gain from the orientation-filter literature
DEFAULT_CUTOFF_HZ = 3.0
DEFAULT_STEP_LENGTH_M = 0.7
DEFAULT_RATE_HZ = 42.0
REFRACTORY_S = 0.25  # caps cadence at 4 Hz, suppresses double counts
VARIANCE_GATE = 0.05  # (m/s^2)^2; below this the subject is stationary
MEAN_WINDOW_S = 2.0
BURN_IN_S = 2.0  # orientation convergence before steps are emitted
_NORM_EPS = 1e-6


@dataclass(frozen=True)
class ImuSample:
    """One 9-axis reading: accel m/s^2, gyro rad/s, mag unit field direction."""

    timestamp: float
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]
    mag: tuple[float, float, float]


@dataclass(frozen=True)
class Quaternion:
    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)


def quat_from_yaw(yaw: float) -> Quaternion:
    return Quaternion(math.cos(yaw / 2.0), 0.0, 0.0, math.sin(yaw / 2.0))


def quat_from_axis_angle(axis: Sequence[float], angle: float) -> Quaternion:
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    s = math.sin(angle / 2.0) / n
    return Quaternion(math.cos(angle / 2.0), ax * s, ay * s, az * s)


def rotate_to_body(q: Quaternion, v: Sequence[float]) -> tuple[float, float, float]:
    """Express a world-frame vector in the body frame described by q."""
    w, x, y, z = q.w, q.x, q.y, q.z
    vx, vy, vz = v
    # q* . v . q expanded
    return (
        (1 - 2 * (y * y + z * z)) * vx + 2 * (x * y + w * z) * vy + 2 * (x * z - w * y) * vz,
        2 * (x * y - w * z) * vx + (1 - 2 * (x * x + z * z)) * vy + 2 * (y * z + w * x) * vz,
        2 * (x * z + w * y) * vx + 2 * (y * z - w * x) * vy + (1 - 2 * (x * x + y * y)) * vz,
    )


@dataclass(frozen=True)
class StepEvent:
    """One detected step: when it happened, how long, and which way."""

    timestamp: float
    length: float  # meters
    heading: float  # radians, 0 = +x east, counterclockwise, [-pi, pi)


@dataclass(frozen=True)
class ImuDelta:
    """Net dead-reckoned displacement over (t_start, t_end]."""

    t_start: float
    t_end: float
    dx: float
    dy: float

    @property
    def displacement(self) -> tuple[float, float]:
        return (self.dx, self.dy)


def lowpass(series: Sequence[float], cutoff: float, rate: float) -> np.ndarray:
    """Causal second-order Butterworth low-pass, forward pass only.

    DC gain is 1, so constant inputs pass through unchanged once the
    transient settles. The filter state starts at steady state for the
    first sample, so there is no artificial startup swing from zero.
    Requires rate > 2 * cutoff.
    """
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise InvalidCutoffError("input series is empty")
    if not (cutoff > 0 and rate > 2 * cutoff):
        raise InvalidCutoffError(
            f"need rate > 2*cutoff (got cutoff={cutoff}, rate={rate})"
        )
    b, a = butter(2, cutoff / (rate / 2.0))
    zi = lfilter_zi(b, a) * series[0]
    out, _ = lfilter(b, a, series, zi=zi)
    return out


def remove_rolling_mean(
    series: Sequence[float], rate: float, window_s: float = MEAN_WINDOW_S
) -> np.ndarray:
    """Subtract the trailing rolling mean (window_s seconds) from the series."""
    x = np.asarray(series, dtype=float)
    n = x.size
    win = max(1, int(round(window_s * rate)))
    cs = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, n + 1)
    lo = np.maximum(0, idx - win)
    means = (cs[idx] - cs[lo]) / (idx - lo)
    return x - means


def _rolling_variance(x: np.ndarray, win: int) -> np.ndarray:
    cs = np.concatenate(([0.0], np.cumsum(x)))
    cs2 = np.concatenate(([0.0], np.cumsum(x * x)))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(0, idx - win)
    count = idx - lo
    mean = (cs[idx] - cs[lo]) / count
    return (cs2[idx] - cs2[lo]) / count - mean * mean


def _step_indices(
    series: np.ndarray,
    rate: float,
    refractory_s: float = REFRACTORY_S,
    variance_gate: float = VARIANCE_GATE,
    variance_window_s: float = MEAN_WINDOW_S,
) -> list[int]:
    win = max(1, int(round(variance_window_s * rate)))
    variance = _rolling_variance(series, win)
    indices: list[int] = []
    last = -math.inf
    for i in range(1, series.size):
        if series[i - 1] < 0.0 <= series[i]:
            t = i / rate
            if t - last < refractory_s:
                continue
            if variance[i] < variance_gate:
                continue
            indices.append(i)
            last = t
    return indices


def detect_steps(
    series: Sequence[float],
    rate: float,
    t0: float = 0.0,
    *,
    refractory_s: float = REFRACTORY_S,
    variance_gate: float = VARIANCE_GATE,
) -> list[float]:
    """Step timestamps from a filtered, mean-removed accel magnitude series.

    One step per positive-going zero crossing, with a refractory period
    suppressing double counts; windows whose rolling variance falls below
    the stationarity gate produce no steps.
    """
    x = np.asarray(series, dtype=float)
    idx = _step_indices(x, rate, refractory_s, variance_gate)
    return [t0 + i / rate for i in idx]


def madgwick_update(
    q: Quaternion, sample: ImuSample, dt: float, beta: float = DEFAULT_BETA
) -> Quaternion:
    """One MARG orientation update: gyro integration with a beta-scaled,
    normalized gradient correction from the accel+mag objective.

    Falls back to gyro-only integration when the accelerometer or
    magnetometer reading is degenerate (norm < 1e-6). The result is
    renormalized to unit norm.
    """
    q0, q1, q2, q3 = q.w, q.x, q.y, q.z
    gx, gy, gz = sample.gyro
    ax, ay, az = sample.accel
    mx, my, mz = sample.mag

    q_dot0 = 0.5 * (-q1 * gx - q2 * gy - q3 * gz)
    q_dot1 = 0.5 * (q0 * gx + q2 * gz - q3 * gy)
    q_dot2 = 0.5 * (q0 * gy - q1 * gz + q3 * gx)
    q_dot3 = 0.5 * (q0 * gz + q1 * gy - q2 * gx)

    a_norm = math.sqrt(ax * ax + ay * ay + az * az)
    m_norm = math.sqrt(mx * mx + my * my + mz * mz)
    if beta > 0 and a_norm >= _NORM_EPS and m_norm >= _NORM_EPS:
        ax, ay, az = ax / a_norm, ay / a_norm, az / a_norm
        mx, my, mz = mx / m_norm, my / m_norm, mz / m_norm

        _2q0mx, _2q0my, _2q0mz = 2 * q0 * mx, 2 * q0 * my, 2 * q0 * mz
        _2q1mx = 2 * q1 * mx
        _2q0, _2q1, _2q2, _2q3 = 2 * q0, 2 * q1, 2 * q2, 2 * q3
        _2q0q2, _2q2q3 = 2 * q0 * q2, 2 * q2 * q3
        q0q0, q0q1, q0q2, q0q3 = q0 * q0, q0 * q1, q0 * q2, q0 * q3
        q1q1, q1q2, q1q3 = q1 * q1, q1 * q2, q1 * q3
        q2q2, q2q3, q3q3 = q2 * q2, q2 * q3, q3 * q3

        # Reference direction of the magnetic field in the earth frame
        hx = (
            mx * q0q0 - _2q0my * q3 + _2q0mz * q2 + mx * q1q1
            + _2q1 * my * q2 + _2q1 * mz * q3 - mx * q2q2 - mx * q3q3
        )
        hy = (
            _2q0mx * q3 + my * q0q0 - _2q0mz * q1 + _2q1mx * q2
            - my * q1q1 + my * q2q2 + _2q2 * mz * q3 - my * q3q3
        )
        _2bx = math.sqrt(hx * hx + hy * hy)
        _2bz = (
            -_2q0mx * q2 + _2q0my * q1 + mz * q0q0 + _2q1mx * q3
            - mz * q1q1 + _2q2 * my * q3 - mz * q2q2 + mz * q3q3
        )
        _4bx, _4bz = 2 * _2bx, 2 * _2bz

        s0 = (
            -_2q2 * (2 * q1q3 - _2q0q2 - ax)
            + _2q1 * (2 * q0q1 + _2q2q3 - ay)
            - _2bz * q2 * (_2bx * (0.5 - q2q2 - q3q3) + _2bz * (q1q3 - q0q2) - mx)
            + (-_2bx * q3 + _2bz * q1) * (_2bx * (q1q2 - q0q3) + _2bz * (q0q1 + q2q3) - my)
            + _2bx * q2 * (_2bx * (q0q2 + q1q3) + _2bz * (0.5 - q1q1 - q2q2) - mz)
        )
        s1 = (
            _2q3 * (2 * q1q3 - _2q0q2 - ax)
            + _2q0 * (2 * q0q1 + _2q2q3 - ay)
            - 4 * q1 * (1 - 2 * q1q1 - 2 * q2q2 - az)
            + _2bz * q3 * (_2bx * (0.5 - q2q2 - q3q3) + _2bz * (q1q3 - q0q2) - mx)
            + (_2bx * q2 + _2bz * q0) * (_2bx * (q1q2 - q0q3) + _2bz * (q0q1 + q2q3) - my)
            + (_2bx * q3 - _4bz * q1) * (_2bx * (q0q2 + q1q3) + _2bz * (0.5 - q1q1 - q2q2) - mz)
        )
        s2 = (
            -_2q0 * (2 * q1q3 - _2q0q2 - ax)
            + _2q3 * (2 * q0q1 + _2q2q3 - ay)
            - 4 * q2 * (1 - 2 * q1q1 - 2 * q2q2 - az)
            + (-_4bx * q2 - _2bz * q0) * (_2bx * (0.5 - q2q2 - q3q3) + _2bz * (q1q3 - q0q2) - mx)
            + (_2bx * q1 + _2bz * q3) * (_2bx * (q1q2 - q0q3) + _2bz * (q0q1 + q2q3) - my)
            + (_2bx * q0 - _4bz * q2) * (_2bx * (q0q2 + q1q3) + _2bz * (0.5 - q1q1 - q2q2) - mz)
        )
        s3 = (
            _2q1 * (2 * q1q3 - _2q0q2 - ax)
            + _2q2 * (2 * q0q1 + _2q2q3 - ay)
            + (-_4bx * q3 + _2bz * q1) * (_2bx * (0.5 - q2q2 - q3q3) + _2bz * (q1q3 - q0q2) - mx)
            + (-_2bx * q0 + _2bz * q2) * (_2bx * (q1q2 - q0q3) + _2bz * (q0q1 + q2q3) - my)
            + _2bx * q1 * (_2bx * (q0q2 + q1q3) + _2bz * (0.5 - q1q1 - q2q2) - mz)
        )
        s_norm = math.sqrt(s0 * s0 + s1 * s1 + s2 * s2 + s3 * s3)
        if s_norm > _NORM_EPS:
            q_dot0 -= beta * s0 / s_norm
            q_dot1 -= beta * s1 / s_norm
            q_dot2 -= beta * s2 / s_norm
            q_dot3 -= beta * s3 / s_norm

    q0 += q_dot0 * dt
    q1 += q_dot1 * dt
    q2 += q_dot2 * dt
    q3 += q_dot3 * dt
    inv = 1.0 / math.sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3)
    return Quaternion(q0 * inv, q1 * inv, q2 * inv, q3 * inv)


class MadgwickFilter:
    """Stateful wrapper around madgwick_update for streaming samples."""

    def __init__(self, beta: float = DEFAULT_BETA, q: Quaternion | None = None):
        self.beta = beta
        self.q = q if q is not None else Quaternion()
        self._last_t: float | None = None

    def update(self, sample: ImuSample, dt: float | None = None) -> Quaternion:
        if dt is None:
            # the very first sample only establishes the time base
            dt = sample.timestamp - self._last_t if self._last_t is not None else 0.0
        self._last_t = sample.timestamp
        if dt > 0:
            self.q = madgwick_update(self.q, sample, dt, self.beta)
        return self.q


def heading_of(q: Quaternion) -> float:
    """Yaw of the body frame projected onto the floor plane, in [-pi, pi).

    Warns (GimbalLockWarning) when pitch exceeds 85 degrees, where the
    projection degenerates and the heading is unreliable.
    """
    sin_pitch = max(-1.0, min(1.0, 2.0 * (q.w * q.y - q.x * q.z)))
    if abs(math.asin(sin_pitch)) > math.radians(85.0):
        warnings.warn("pitch near +-90 deg; heading unreliable", GimbalLockWarning)
    yaw = math.atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z))
    return wrap_angle(yaw)


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def yaw_to_floor_heading(yaw: float, declination: float = 0.0) -> float:
    """Map filter yaw (measured from magnetic north) to the floor frame.

    Magnetic north corresponds to the plan's +y axis when declination is 0;
    floor headings are measured from +x (east), counterclockwise.
    """
    return wrap_angle(yaw + math.pi / 2.0 + declination)


class StepTrajectory:
    """Cumulative displacement of a step sequence, queryable over intervals.

    delta(a, b) sums length * (cos h, sin h) over steps in (a, b]; built on
    prefix sums, so delta(a, b) + delta(b, c) == delta(a, c) exactly.
    """

    def __init__(self, steps: Sequence[StepEvent]):
        times = [s.timestamp for s in steps]
        if any(t2 < t1 for t1, t2 in zip(times, times[1:])):
            raise ReversedIntervalError("steps must be time-ordered")
        self.steps = tuple(steps)
        self._times = times
        cx, cy = [0.0], [0.0]
        for s in steps:
            cx.append(cx[-1] + s.length * math.cos(s.heading))
            cy.append(cy[-1] + s.length * math.sin(s.heading))
        self._cx, self._cy = cx, cy

    @property
    def end_time(self) -> float | None:
        return self._times[-1] if self._times else None

    def __call__(self, t_start: float, t_end: float) -> ImuDelta:
        if t_end < t_start:
            raise ReversedIntervalError(f"t_end {t_end} < t_start {t_start}")
        lo = bisect_right(self._times, t_start)
        hi = bisect_right(self._times, t_end)
        return ImuDelta(t_start, t_end, self._cx[hi] - self._cx[lo], self._cy[hi] - self._cy[lo])


def integrate_trajectory(steps: Sequence[StepEvent]) -> StepTrajectory:
    """Bind a time-ordered step list into an interval-queryable trajectory."""
    return StepTrajectory(steps)


@dataclass(frozen=True)
class PdrConfig:
    """Tunables for the dead-reckoning pipeline."""

    cutoff_hz: float = DEFAULT_CUTOFF_HZ
    beta: float = DEFAULT_BETA
    step_length_m: float = DEFAULT_STEP_LENGTH_M
    step_model: str = "constant"  # "constant" | "weinberg"
    weinberg_k: float = 0.45
    declination: float = 0.0
    burn_in_s: float = BURN_IN_S
    burn_in_beta: float = 2.5  # aggressive gain while aligning from identity
    refractory_s: float = REFRACTORY_S
    variance_gate: float = VARIANCE_GATE


def dead_reckon(
    samples: Sequence[ImuSample], config: PdrConfig = PdrConfig()
) -> list[StepEvent]:
    """Full pipeline from raw IMU samples to step events with headings.

    Steps within the initial burn-in (orientation convergence) are
    suppressed. Headings come from the orientation filter's yaw at the step
    sample, mapped into the floor frame.
    """
    if len(samples) < 2:
        return []
    t_first = samples[0].timestamp
    span = samples[-1].timestamp - t_first
    rate = (len(samples) - 1) / span if span > 0 else DEFAULT_RATE_HZ

    mags = np.array([math.sqrt(s.accel[0] ** 2 + s.accel[1] ** 2 + s.accel[2] ** 2) for s in samples])
    filtered = lowpass(mags, config.cutoff_hz, rate)
    detrended = remove_rolling_mean(filtered, rate)
    idx = _step_indices(
        detrended, rate, refractory_s=config.refractory_s, variance_gate=config.variance_gate
    )

    ahrs = MadgwickFilter(beta=config.burn_in_beta)
    yaws = np.empty(len(samples))
    for i, s in enumerate(samples):
        if s.timestamp - t_first >= config.burn_in_s:
            ahrs.beta = config.beta
        q = ahrs.update(s)
        yaws[i] = math.atan2(
            2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z)
        )

    events: list[StepEvent] = []
    prev_i = 0
    for i in idx:
        ts = samples[i].timestamp
        if ts - t_first < config.burn_in_s:
            prev_i = i
            continue
        if config.step_model == "weinberg":
            seg = filtered[max(prev_i, i - int(rate)):i + 1]
            swing = float(seg.max() - seg.min()) if seg.size else 0.0
            length = config.weinberg_k * swing**0.25 if swing > 0 else config.step_length_m
        else:
            length = config.step_length_m
        heading = yaw_to_floor_heading(float(yaws[i]), config.declination)
        events.append(StepEvent(ts, length, heading))
        prev_i = i
    return events
