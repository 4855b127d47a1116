"""wavguard - collapsed segment detection and suppression."""

__version__ = "0.1.0"
