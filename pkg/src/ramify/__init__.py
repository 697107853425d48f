"""Exact graded homological algebra for ramification computations of ring spectra."""

__version__ = "0.1.0"
