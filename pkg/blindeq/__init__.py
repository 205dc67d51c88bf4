"""blindeq - blind channel equalization with vector-quantized autoencoders and classical baselines."""

__version__ = "1.0.0"
