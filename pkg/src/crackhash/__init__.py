"""Perceptual-hash features and non-neural classifiers for concrete crack detection."""

__version__ = "0.1.0"
