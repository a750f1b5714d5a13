"""Linearized elastocapillary inclusions: stability, cell problems and dilute bounds."""
from .errors import CapHomogError
from .kernels import BACKEND
from .material import CapillaryParams, ElasticTensor, make_params

__version__ = "0.1.0"

__all__ = ["BACKEND", "CapHomogError", "CapillaryParams", "ElasticTensor", "make_params", "__version__"]
