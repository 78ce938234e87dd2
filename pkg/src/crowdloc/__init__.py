"""Calibration-free indoor localization from unlabeled crowdsourced RSS data."""

__version__ = "0.1.0"
