"""Coverage analysis of mmWave microcells on Manhattan-type street grids."""
__version__ = "0.1.0"
