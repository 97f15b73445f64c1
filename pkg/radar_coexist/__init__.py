"""Radar Coexist: pulsed shipborne radar interference into a 3.5 GHz TDD LTE uplink."""

__version__ = "1.0.0"
