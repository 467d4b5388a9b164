# coding=utf-8
"""Chiplet I/O design-space exploration: parasitic extraction, CDM ESD diode
sizing, direct-signaling-link eye analysis and AIB/DSL area-bandwidth models."""

__version__ = '0.3.0'
