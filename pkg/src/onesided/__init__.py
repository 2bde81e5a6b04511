"""One-sided classification of spectra and a robustness experiment harness."""

__version__ = "0.1.0"
