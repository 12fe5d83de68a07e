"""Cellular-genetic-algorithm search for compact multilayer perceptrons."""

__version__ = "0.1.0"
