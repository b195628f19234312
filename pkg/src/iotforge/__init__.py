"""iotforge: three little languages, a linker, and a simulated runtime.

Author a domain vocabulary, an application architecture, and a deployment;
the toolchain resolves them, places service instances on devices with a
seeded random mapper, links one declarative package per device, and executes
the whole network deterministically in a single process.
"""

__version__ = "0.1.0"
