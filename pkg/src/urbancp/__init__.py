"""Urban- and time-aware CP tensor completion for inter-region traffic data."""

__version__ = "0.1.0"
