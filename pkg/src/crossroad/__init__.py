"""Crossroad: route prediction for vehicles approaching a crossroad."""

__version__ = "0.1.0"
