"""Code-to-code recommendation with de-skewed MinHash LSH."""

__version__ = "0.1.0"
