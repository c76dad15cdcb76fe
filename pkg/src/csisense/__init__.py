"""Joint activity recognition and indoor localization from WiFi CSI fingerprints."""

__version__ = "0.1.0"
