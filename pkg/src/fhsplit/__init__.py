"""Cloud-RAN fronthaul dimensioning and bidirectional 7.3 split emulation."""

__version__ = "0.1.0"
