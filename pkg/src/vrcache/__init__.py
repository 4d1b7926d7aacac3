"""Edge caching and delivery scheduling for tiled VR video."""

__version__ = "0.1.0"
