"""contourgraph - shape descriptors from thresholded contour networks."""

__version__ = "0.1.0"
