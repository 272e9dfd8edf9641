"""Essay-level emotion classification experiments."""

__version__ = "0.1.0"
