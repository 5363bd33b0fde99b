"""Deterministic two-tank SCADA simulator producing labeled intrusion-detection datasets."""
__version__ = "0.1.0"
