"""Behavioral simulator and analysis toolkit for tapped-delay-line TDCs."""

__version__ = "0.1.0"
