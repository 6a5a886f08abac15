"""Roto-translation invariant Fourier descriptors on the semidiscrete
roto-translation group, with moment-descriptor baselines and an SVM
recognition harness."""

from ._backend import available_backends, backend_name, set_backend
from .descriptors import DescriptorConfig, FeatureVector, extract_features
from .imagecore import LabeledSample, Raster
from .spectral import HexGrid, Spectrum, build_hex_grid, dft2_shifted

__version__ = "0.1.0"

__all__ = [
    "DescriptorConfig",
    "FeatureVector",
    "HexGrid",
    "LabeledSample",
    "Raster",
    "Spectrum",
    "available_backends",
    "backend_name",
    "build_hex_grid",
    "dft2_shifted",
    "extract_features",
    "set_backend",
    "__version__",
]
