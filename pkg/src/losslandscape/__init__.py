"""Loss-landscape analysis for small neural networks.

Train desk-scale models, then look at the loss around their minimizers along
filter-normalized random directions, between minimizers, over Hessian
eigenvalue-ratio maps and over the PCA plane of the optimizer path.
"""
from ._accel import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
