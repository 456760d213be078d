"""Short-length binary linear codes under universal near-ML decoding."""

__version__ = "0.1.0"
