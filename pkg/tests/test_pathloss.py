import numpy as np
import pytest
from hypothesis import given, strategies as st

from bletrack.errors import (
    CalibrationWarning,
    DegenerateSamplesError,
    InvalidDistanceError,
    InvalidParamsError,
)
from bletrack.pathloss import (
    PathLossParams,
    calibrate_n,
    distance_to_rssi,
    rssi_to_distance,
)


class TestRssiToDistance:
    def test_at_one_meter_rssi(self):
        assert rssi_to_distance(PathLossParams(-70, 2.0), -70) == 1.0

    def test_twenty_db_down(self):
        assert rssi_to_distance(PathLossParams(-70, 2.0), -90) == pytest.approx(10.0)

    def test_high_exponent(self):
        assert rssi_to_distance(PathLossParams(-70, 4.0), -90) == pytest.approx(
            3.1623, abs=1e-4
        )

    @given(
        st.floats(min_value=-96, max_value=-40),
        st.floats(min_value=-95.9, max_value=-40.1),
    )
    def test_monotone_decreasing(self, i1, i2):
        params = PathLossParams(-70, 2.5)
        if i1 < i2:
            assert rssi_to_distance(params, i1) > rssi_to_distance(params, i2)


class TestDistanceToRssi:
    def test_one_meter(self):
        assert distance_to_rssi(PathLossParams(-70, 2.0), 1.0) == -70.0

    def test_ten_meters(self):
        assert distance_to_rssi(PathLossParams(-70, 2.0), 10.0) == pytest.approx(-90.0)

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_nonpositive_distance_rejected(self, d):
        with pytest.raises(InvalidDistanceError):
            distance_to_rssi(PathLossParams(), d)

    @given(
        st.floats(min_value=0.1, max_value=50.0),
        st.floats(min_value=1.5, max_value=6.0),
    )
    def test_round_trip(self, d, n):
        params = PathLossParams(-70, n)
        assert rssi_to_distance(params, distance_to_rssi(params, d)) == pytest.approx(
            d, rel=1e-9
        )


class TestParamsValidation:
    @pytest.mark.parametrize("n", [0.0, -2.0, float("nan")])
    def test_bad_exponent(self, n):
        with pytest.raises(InvalidParamsError):
            PathLossParams(-70, n)

    def test_bad_m_rssi(self):
        with pytest.raises(InvalidParamsError):
            PathLossParams(float("inf"), 2.0)


class TestCalibration:
    def test_recovers_noiseless_exponent(self):
        gen = PathLossParams(-70, 2.5)
        samples = [(d, distance_to_rssi(gen, d)) for d in (2.0, 4.0, 8.0)]
        assert calibrate_n(-70, samples) == pytest.approx(2.5, abs=1e-9)

    def test_single_sample_solve(self):
        assert calibrate_n(-70, [(10.0, -90.0)]) == pytest.approx(2.0)

    def test_all_samples_at_one_meter(self):
        with pytest.raises(DegenerateSamplesError):
            calibrate_n(-70, [(1.0, -69.0), (1.0, -71.0)])

    def test_negative_distance_rejected(self):
        with pytest.raises(InvalidDistanceError):
            calibrate_n(-70, [(-2.0, -80.0)])

    @given(st.floats(min_value=1.5, max_value=6.0))
    def test_noiseless_recovery_property(self, n):
        gen = PathLossParams(-70, n)
        samples = [(d, distance_to_rssi(gen, d)) for d in (0.5, 2.0, 5.0, 12.0)]
        assert calibrate_n(-70, samples) == pytest.approx(n, abs=1e-9)

    def test_noisy_fit_within_tolerance(self):
        rng = np.random.default_rng(314)
        gen = PathLossParams(-70, 2.8)
        dists = rng.uniform(1.5, 30.0, 100)
        samples = [(d, distance_to_rssi(gen, d) + rng.normal(0, 2.0)) for d in dists]
        assert abs(calibrate_n(-70, samples) - 2.8) < 0.15

    def test_out_of_range_fit_warns_and_clamps(self):
        gen = PathLossParams(-70, 8.0)
        samples = [(d, distance_to_rssi(gen, d)) for d in (2.0, 4.0)]
        with pytest.warns(CalibrationWarning):
            n = calibrate_n(-70, samples)
        assert n == 6.0

    def test_clamp_disabled(self):
        gen = PathLossParams(-70, 8.0)
        samples = [(d, distance_to_rssi(gen, d)) for d in (2.0, 4.0)]
        assert calibrate_n(-70, samples, clamp=None) == pytest.approx(8.0)
