"""Exception and warning types shared across the package."""


class BletrackError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParamsError(BletrackError):
    """Path-loss parameters are out of their valid domain (e.g. N <= 0)."""


class InvalidDistanceError(BletrackError):
    """A distance argument must be strictly positive."""


class DegenerateSamplesError(BletrackError):
    """Calibration samples carry no information about the path-loss exponent."""


class UnknownDeviceError(BletrackError):
    """A hit references a device that is not in the registry."""


class EmptyWindowError(BletrackError):
    """A hit window contains no devices."""


class UnsortedInputError(BletrackError):
    """Timestamps regress beyond the tolerated reorder window."""


class InvalidCutoffError(BletrackError):
    """Low-pass cutoff incompatible with the sample rate, or empty input."""


class ReversedIntervalError(BletrackError):
    """Interval end precedes its start."""


class EmptyInputError(BletrackError):
    """No usable input data (no BLE fixes and no IMU trajectory)."""


class SchemaError(BletrackError):
    """A file does not match its documented schema.

    Carries the offending line number when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class EmptyBundleError(BletrackError):
    """Input files parsed but contained no valid records."""


class NoOverlapError(BletrackError):
    """No track fix could be matched to a ground-truth sample."""


class NoRegionSamplesError(BletrackError):
    """Ground truth never enters a named region."""


class CalibrationWarning(UserWarning):
    """Fitted path-loss exponent fell outside the physically plausible range."""


class GimbalLockWarning(UserWarning):
    """Pitch is close to +-90 degrees; extracted heading is unreliable."""
