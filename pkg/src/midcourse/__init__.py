"""Midpoint-of-course student performance prediction: gradebook preprocessing,
from-scratch 1-D CNN and LSTM classifiers, grid-searched classical baselines,
and an evaluation harness."""

__version__ = "0.1.0"
