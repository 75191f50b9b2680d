"""Toolkit for synthesizing multi-image reasoning datasets, executing focused
reasoning chains at inference time, and running a human quality-review
protocol with agreement statistics."""

__version__ = "0.1.0"
