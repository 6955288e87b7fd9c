"""Color-space-aware image compression benchmarking toolkit."""

from .imageio import ColorSpace, PlanarImage, read_image, write_image

__version__ = "0.1.0"

__all__ = ["ColorSpace", "PlanarImage", "read_image", "write_image", "__version__"]
