"""Scalar losses over a flat parameter vector.

An objective maps a parameter array to ``(loss, error_rate)`` and exposes the
same loss as a differentiable function of a :class:`~losslandscape.tensor.Tensor`.
The surface and curvature code only talk to this interface.
"""
import numpy as np

from .models import ParamVector
from .tensor import Tensor, hessian_vector_product, value_and_grad

__all__ = ["ModelObjective", "QuadraticObjective"]


def _raw(theta):
    return theta.data if isinstance(theta, ParamVector) else np.asarray(theta, dtype=np.float64)


class ModelObjective:
    """Mean cross-entropy of a model on a dataset, in inference mode.

    ``subsample`` evaluates on a fixed seeded subset instead of the full set.
    """

    def __init__(self, model, dataset, subsample=None, seed=0):
        self.model = model
        self.split = dataset.split
        if subsample is not None and subsample < len(dataset):
            idx = np.sort(np.random.default_rng(seed).choice(len(dataset), subsample, replace=False))
            dataset = dataset.subset(idx)
        self.dataset = dataset
        self.spec_hash = model.spec_hash

    @property
    def size(self):
        return self.model.size

    def evaluate(self, theta):
        return self.model.evaluate(_raw(theta), self.dataset.features, self.dataset.labels)

    def loss_fn(self, t):
        return self.model.loss(t, self.dataset.features, self.dataset.labels)

    def gradient(self, theta):
        return value_and_grad(self.loss_fn, _raw(theta))[1]

    def hvp(self, theta, v):
        return hessian_vector_product(self.loss_fn, _raw(theta), v)


class QuadraticObjective:
    """``0.5 * theta^T A theta`` (error rate reported as 0)."""

    split = "train"
    spec_hash = "quadratic"

    def __init__(self, a):
        self.a = np.asarray(a, dtype=np.float64)
        if self.a.ndim != 2 or self.a.shape[0] != self.a.shape[1]:
            raise ValueError(f"A must be square, got {self.a.shape}")

    @property
    def size(self):
        return self.a.shape[0]

    def evaluate(self, theta):
        t = _raw(theta)
        return float(0.5 * t @ self.a @ t), 0.0

    def loss_fn(self, t):
        return (t * (Tensor(self.a) @ t.reshape(-1, 1)).reshape(-1)).sum() * 0.5

    def gradient(self, theta):
        return 0.5 * (self.a + self.a.T) @ _raw(theta)

    def hvp(self, theta, v):
        return hessian_vector_product(self.loss_fn, _raw(theta), v)
