"""Passivity-guaranteed multi-band stiffness control toolkit for series elastic actuators."""

__version__ = "0.1.0"
