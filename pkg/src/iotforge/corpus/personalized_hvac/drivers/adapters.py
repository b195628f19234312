"""Adapters binding every building resource to the simulation trace.

Swap a binding for a callable feed to source readings from code instead
of a trace file.
"""

from iotforge.runtime import trace_feed

DRIVERS = {
    "TemperatureSensor": trace_feed("tempMeasurement"),
    "SmokeDetector": trace_feed("smokeDetected"),
    "MotionSensor": trace_feed("motionDetected"),
    "Stove": trace_feed("stoveOn"),
    "BadgeReader": trace_feed("badgeDetected", "badgeGone", "badgeInfo"),
    "ProfileDB": trace_feed("preferredTemp"),
}
