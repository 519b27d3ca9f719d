"""Output-light noise spectra of a driven optomechanical cavity."""

__version__ = "0.1.0"
