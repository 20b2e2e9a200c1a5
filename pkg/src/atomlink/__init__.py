"""atomlink: simulator and analysis toolkit for a heralded two-node
atomic quantum network link over telecom fibre."""

__version__ = "0.1.0"
