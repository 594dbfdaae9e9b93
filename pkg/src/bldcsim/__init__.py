"""Sensorless six-step BLDC drive simulator and inverter MOSFET selection tools."""

__version__ = "0.1.0"
