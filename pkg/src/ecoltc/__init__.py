"""Liquid time-constant surrogates for coupled natural-industrial ecosystems."""

__version__ = "0.1.0"
