"""Adversarial-cooperative thrower/catcher training on a planar throw-catch simulator."""

__version__ = "0.1.0"
