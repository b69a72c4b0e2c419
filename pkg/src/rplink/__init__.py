"""Representative-period unit commitment with alternative edge-linking methods."""

__version__ = "0.1.0"
