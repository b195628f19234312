"""Adapters binding highway resources to the simulation trace."""

from iotforge.runtime import trace_feed

DRIVERS = {
    "SpeedSensor": trace_feed("speedMeasurement"),
    "PresenceSensor": trace_feed("vehicleCount"),
}
