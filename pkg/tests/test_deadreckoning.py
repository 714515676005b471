import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bletrack.deadreckoning import (
    ImuSample,
    MadgwickFilter,
    Quaternion,
    StepEvent,
    detect_steps,
    heading_of,
    integrate_trajectory,
    lowpass,
    madgwick_update,
    quat_from_axis_angle,
    quat_from_yaw,
    remove_rolling_mean,
    wrap_angle,
)
from bletrack.errors import GimbalLockWarning, InvalidCutoffError, ReversedIntervalError

RATE = 42.0
DT = 1.0 / RATE
LEVEL_ACCEL = (0.0, 0.0, 9.81)
NORTH_MAG = (math.cos(math.radians(60)), 0.0, -math.sin(math.radians(60)))


def still_sample(t=0.0):
    return ImuSample(t, LEVEL_ACCEL, (0.0, 0.0, 0.0), NORTH_MAG)


class TestLowpass:
    def test_constant_input_passes_through(self):
        out = lowpass(np.full(int(2 * RATE), 3.3), 3.0, RATE)
        assert abs(out[-1] - 3.3) < 1e-6

    def test_stopband_attenuation(self):
        t = np.arange(0, 10, DT)
        out = lowpass(np.sin(2 * np.pi * 15 * t), 3.0, RATE)
        assert np.abs(out[len(out) // 2 :]).max() < 0.10

    def test_passband_preserved(self):
        t = np.arange(0, 10, DT)
        out = lowpass(np.sin(2 * np.pi * 0.5 * t), 3.0, RATE)
        assert np.abs(out[len(out) // 2 :]).max() == pytest.approx(1.0, abs=0.05)

    def test_analytic_magnitude_response(self):
        # oracle: evaluate |H(e^{j w})| from the difference equation directly
        from scipy.signal import butter

        b, a = butter(2, 3.0 / (RATE / 2))
        for f in (0.5, 15.0):
            w = 2 * np.pi * f / RATE
            z = np.exp(1j * w)
            h = np.polyval(b[::-1], 1 / z) / np.polyval(a[::-1], 1 / z)
            t = np.arange(0, 30, DT)
            out = lowpass(np.sin(2 * np.pi * f * t), 3.0, RATE)
            assert np.abs(out[len(out) // 2 :]).max() == pytest.approx(
                abs(h), rel=0.05
            )

    def test_cutoff_violates_nyquist(self):
        with pytest.raises(InvalidCutoffError):
            lowpass(np.ones(10), 25.0, RATE)

    def test_empty_series(self):
        with pytest.raises(InvalidCutoffError):
            lowpass(np.array([]), 3.0, RATE)

    def test_bounded_input_bounded_output(self):
        rng = np.random.default_rng(77)
        out = lowpass(rng.uniform(-50, 50, 1_000_000), 3.0, RATE)
        assert np.all(np.isfinite(out))


class TestDetectSteps:
    def test_synthetic_gait(self):
        t = np.arange(0, 10, DT)
        sig = 1.5 * np.sin(2 * np.pi * 2.0 * t - np.pi / 2)
        steps = detect_steps(remove_rolling_mean(sig, RATE), RATE)
        assert abs(len(steps) - 20) <= 1

    def test_all_zero_signal(self):
        assert detect_steps(np.zeros(int(30 * RATE)), RATE) == []

    def test_sub_threshold_jitter(self):
        t = np.arange(0, 30, DT)
        jitter = 0.1 * np.sin(2 * np.pi * 4 * t)
        assert detect_steps(remove_rolling_mean(jitter, RATE), RATE) == []

    def test_refractory_suppresses_double_counts(self):
        # 8 Hz oscillation would cross 8 times/s; refractory caps at 4 Hz
        t = np.arange(0, 10, 1 / 100.0)
        sig = 1.5 * np.sin(2 * np.pi * 8 * t)
        steps = detect_steps(sig, 100.0)
        assert len(steps) <= 41

    def test_timestamps_offset_by_t0(self):
        t = np.arange(0, 10, DT)
        sig = 1.5 * np.sin(2 * np.pi * 2.0 * t - np.pi / 2)
        s0 = detect_steps(remove_rolling_mean(sig, RATE), RATE, t0=0.0)
        s5 = detect_steps(remove_rolling_mean(sig, RATE), RATE, t0=5.0)
        assert s5 == pytest.approx([t + 5.0 for t in s0])


class TestMadgwick:
    def test_consistent_measurement_keeps_identity(self):
        q = madgwick_update(Quaternion(), still_sample(), DT, beta=0.1)
        assert abs(q.w - 1.0) < 1e-6 and abs(q.x) < 1e-6 and abs(q.y) < 1e-6 and abs(q.z) < 1e-6

    def test_gyro_only_yaw_integration(self):
        q = Quaternion()
        sample = ImuSample(0, (0, 0, 0), (0, 0, math.pi / 2), (0, 0, 0))
        for _ in range(42):
            q = madgwick_update(q, sample, DT, beta=0.0)
        assert math.degrees(heading_of(q)) == pytest.approx(90.0, abs=1.0)

    def test_static_tilt_converges(self):
        q = quat_from_axis_angle((1, 0, 0), math.radians(30))
        for _ in range(int(5 * RATE)):
            q = madgwick_update(q, still_sample(), DT, beta=0.1)
        err = 2 * math.degrees(math.acos(min(1.0, abs(q.w))))
        assert err < 2.0

    def test_unit_norm_preserved(self):
        rng = np.random.default_rng(3)
        q = Quaternion()
        for _ in range(5000):
            s = ImuSample(
                0.0,
                tuple(rng.normal(0, 4, 3)),
                tuple(rng.normal(0, 2, 3)),
                tuple(rng.normal(0, 1, 3)),
            )
            q = madgwick_update(q, s, DT, beta=0.1)
            assert abs(q.norm() - 1.0) < 1e-6

    def test_degenerate_accel_falls_back_to_gyro(self):
        gyro = (0.1, -0.2, 0.3)
        dead = ImuSample(0, (0, 0, 0), gyro, NORTH_MAG)
        q1 = madgwick_update(Quaternion(), dead, DT, beta=0.5)
        q2 = madgwick_update(Quaternion(), ImuSample(0, LEVEL_ACCEL, gyro, NORTH_MAG), DT, beta=0.0)
        for attr in "wxyz":
            assert getattr(q1, attr) == pytest.approx(getattr(q2, attr), abs=1e-12)

    def test_filter_wrapper_derives_dt_from_timestamps(self):
        # samples at half the nominal rate: dt must come from timestamps,
        # not the 42 Hz default, for the yaw to integrate to 90 degrees
        ahrs = MadgwickFilter(beta=0.0)
        for k in range(22):
            ahrs.update(ImuSample(k / 21.0, (0, 0, 0), (0, 0, math.pi / 2), (0, 0, 0)))
        assert math.degrees(heading_of(ahrs.q)) == pytest.approx(90.0, abs=1.5)


class TestHeadingOf:
    def test_identity(self):
        assert heading_of(Quaternion()) == 0.0

    def test_quarter_turns(self):
        assert heading_of(quat_from_yaw(math.pi / 2)) == pytest.approx(math.pi / 2, abs=1e-6)
        assert heading_of(quat_from_yaw(-math.pi / 2)) == pytest.approx(-math.pi / 2, abs=1e-6)

    @given(st.floats(min_value=-math.pi + 1e-6, max_value=math.pi - 1e-6))
    def test_inverts_construction(self, theta):
        assert heading_of(quat_from_yaw(theta)) == pytest.approx(theta, abs=1e-6)

    def test_gimbal_warning(self):
        q = quat_from_axis_angle((0, 1, 0), math.radians(89))
        with pytest.warns(GimbalLockWarning):
            heading_of(q)


class TestTrajectory:
    def test_straight_east(self):
        steps = [StepEvent(float(i + 1), 0.7, 0.0) for i in range(4)]
        d = integrate_trajectory(steps)(0.0, 10.0)
        assert d.displacement == pytest.approx((2.8, 0.0))

    def test_alternating_headings_cancel(self):
        steps = [
            StepEvent(1.0, 0.7, 0.0),
            StepEvent(2.0, 0.7, -math.pi),
            StepEvent(3.0, 0.7, 0.0),
            StepEvent(4.0, 0.7, -math.pi),
        ]
        d = integrate_trajectory(steps)(0.0, 5.0)
        assert abs(d.dx) < 1e-12 and abs(d.dy) < 1e-12

    def test_empty_interval(self):
        traj = integrate_trajectory([StepEvent(1.0, 0.7, 0.0)])
        assert traj(5.0, 5.0).displacement == (0.0, 0.0)

    def test_interval_half_open_left(self):
        traj = integrate_trajectory([StepEvent(1.0, 0.7, 0.0)])
        assert traj(1.0, 2.0).dx == 0.0  # step AT t_start excluded
        assert traj(0.5, 1.0).dx == pytest.approx(0.7)  # included at t_end

    def test_reversed_interval(self):
        traj = integrate_trajectory([])
        with pytest.raises(ReversedIntervalError):
            traj(2.0, 1.0)

    def test_unsorted_steps_rejected(self):
        with pytest.raises(ReversedIntervalError):
            integrate_trajectory([StepEvent(2.0, 0.7, 0.0), StepEvent(1.0, 0.7, 0.0)])

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_additivity_exact(self, data):
        n = data.draw(st.integers(0, 30))
        times = sorted(
            data.draw(st.lists(st.floats(0, 100), min_size=n, max_size=n))
        )
        steps = [
            StepEvent(t, 0.5 + (i % 3) * 0.2, wrap_angle(i * 1.1)) for i, t in enumerate(times)
        ]
        traj = integrate_trajectory(steps)
        a, b, c = sorted(data.draw(st.tuples(*[st.floats(0, 100)] * 3)))
        d_ab, d_bc, d_ac = traj(a, b), traj(b, c), traj(a, c)
        # prefix sums keep additivity at one rounding step, no drift
        assert d_ab.dx + d_bc.dx == pytest.approx(d_ac.dx, abs=1e-9)
        assert d_ab.dy + d_bc.dy == pytest.approx(d_ac.dy, abs=1e-9)
