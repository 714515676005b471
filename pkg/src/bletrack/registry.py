"""Registry of fixed edge receivers: position plus channel parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BletrackError, UnknownDeviceError
from .geometry import FloorPlan, Position2D
from .pathloss import PathLossParams


@dataclass(frozen=True)
class DeviceEntry:
    position: Position2D
    params: PathLossParams


@dataclass(frozen=True)
class DeviceRegistry:
    """Map of device_id -> (position, path-loss params) for all receivers."""

    devices: dict[str, DeviceEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.devices)

    def __contains__(self, device_id: str) -> bool:
        return device_id in self.devices

    def __getitem__(self, device_id: str) -> DeviceEntry:
        try:
            return self.devices[device_id]
        except KeyError:
            raise UnknownDeviceError(f"device {device_id!r} not in registry") from None

    def position_of(self, device_id: str) -> Position2D:
        return self[device_id].position

    def params_of(self, device_id: str) -> PathLossParams:
        return self[device_id].params

    def ids(self) -> list[str]:
        return sorted(self.devices)

    def with_n_factor(self, device_id: str, n_factor: float) -> "DeviceRegistry":
        """Copy of the registry with one device's exponent replaced."""
        entry = self[device_id]
        devices = dict(self.devices)
        devices[device_id] = DeviceEntry(
            entry.position, PathLossParams(entry.params.m_rssi, n_factor)
        )
        return DeviceRegistry(devices)

    def validate_against(self, plan: FloorPlan) -> None:
        for device_id, entry in self.devices.items():
            if not plan.contains(entry.position):
                raise BletrackError(
                    f"device {device_id!r} at ({entry.position.x}, {entry.position.y}) "
                    "outside site bounds"
                )
