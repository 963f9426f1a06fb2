"""Small reverse-mode autodiff engine over float64 numpy arrays.

Every backward rule is itself written with differentiable ``Tensor`` ops, so
a gradient computed with ``create_graph=True`` can be differentiated again.
That is how :func:`hessian_vector_product` gets exact second derivatives.

Graph recording is controlled per thread (see :func:`no_grad`), so separate
threads can evaluate replicas of a model concurrently.
"""
import contextlib
import threading

import numpy as np

from . import kernels

__all__ = [
    "Tensor",
    "as_tensor",
    "no_grad",
    "enable_grad",
    "is_grad_enabled",
    "grad",
    "value_and_grad",
    "hessian_vector_product",
    "take",
    "put",
    "segment",
    "cross_entropy",
]

_state = threading.local()


def is_grad_enabled():
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def _grad_mode(flag):
    prev = is_grad_enabled()
    _state.enabled = flag
    try:
        yield
    finally:
        _state.enabled = prev


def no_grad():
    """Context manager that stops graph recording in the current thread."""
    return _grad_mode(False)


def enable_grad():
    return _grad_mode(True)


class Tensor:
    __slots__ = ("data", "requires_grad", "_parents", "_backward", "op")

    __array_priority__ = 100.0

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self.op = "leaf"

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(as_tensor(other), self)

    # reductions and shape ---------------------------------------------------
    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        n = self.size if axis is None else int(np.prod([self.shape[a] for a in _axes(axis, self.ndim)]))
        return tsum(self, axis, keepdims) * (1.0 / n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)

    def exp(self):
        return texp(self)

    def log(self):
        return tlog(self)

    def relu(self):
        return relu(self)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward, op):
    out = Tensor(data)
    out.op = op
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------


def sum_to(x, shape):
    """Reduce a broadcast result back to ``shape`` (adjoint of broadcasting)."""
    x = as_tensor(x)
    shape = tuple(shape)
    if x.shape == shape:
        return x
    lead = x.ndim - len(shape)
    axes = tuple(range(lead)) + tuple(
        lead + i for i, n in enumerate(shape) if n == 1 and x.shape[lead + i] != 1
    )
    data = x.data.sum(axis=axes, keepdims=True)
    if lead:
        data = data.reshape(data.shape[lead:])
    in_shape = x.shape
    return _make(data, (x,), lambda g: (broadcast_to(g, in_shape),), "sum_to")


def broadcast_to(x, shape):
    x = as_tensor(x)
    shape = tuple(shape)
    if x.shape == shape:
        return x
    in_shape = x.shape
    data = np.broadcast_to(x.data, shape).copy()
    return _make(data, (x,), lambda g: (sum_to(g, in_shape),), "broadcast_to")


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _make(
        a.data + b.data, (a, b), lambda g: (sum_to(g, sa), sum_to(g, sb)), "add"
    )


def neg(a):
    a = as_tensor(a)
    return _make(-a.data, (a,), lambda g: (neg(g),), "neg")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape

    def backward(g):
        ga = sum_to(mul(g, b), sa) if a.requires_grad else None
        gb = sum_to(mul(g, a), sb) if b.requires_grad else None
        return ga, gb

    return _make(a.data * b.data, (a, b), backward, "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape

    def backward(g):
        ga = sum_to(div(g, b), sa) if a.requires_grad else None
        gb = sum_to(neg(div(mul(g, a), mul(b, b))), sb) if b.requires_grad else None
        return ga, gb

    return _make(a.data / b.data, (a, b), backward, "div")


def power(a, p):
    a = as_tensor(a)
    p = float(p)
    return _make(
        a.data**p, (a,), lambda g: (mul(g, mul(p, power(a, p - 1.0))),), "pow"
    )


def texp(a):
    a = as_tensor(a)
    out = None

    def backward(g):
        return (mul(g, out),)

    out = _make(np.exp(a.data), (a,), backward, "exp")
    return out


def tlog(a):
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (div(g, a),), "log")


def relu(a):
    a = as_tensor(a)
    mask = Tensor((a.data > 0).astype(np.float64))
    return _make(np.where(a.data > 0, a.data, 0.0), (a,), lambda g: (mul(g, mask),), "relu")


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        ga = matmul(g, transpose(b, None)) if a.requires_grad else None
        gb = matmul(transpose(a, None), g) if b.requires_grad else None
        return ga, gb

    return _make(a.data @ b.data, (a, b), backward, "matmul")


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _axes(axis, a.ndim)
    in_shape = a.shape
    kept = tuple(1 if i in axes else n for i, n in enumerate(in_shape))

    def backward(g):
        return (broadcast_to(reshape(g, kept), in_shape),)

    data = a.data.sum(axis=axes, keepdims=keepdims)
    return _make(np.asarray(data), (a,), backward, "sum")


def reshape(a, shape):
    a = as_tensor(a)
    in_shape = a.shape
    data = a.data.reshape(shape)
    return _make(data, (a,), lambda g: (reshape(g, in_shape),), "reshape")


def transpose(a, axes=None):
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = tuple(np.argsort(axes))
    data = np.ascontiguousarray(a.data.transpose(axes))
    return _make(data, (a,), lambda g: (transpose(g, inv),), "transpose")


def segment(a, start, stop):
    """Contiguous slice ``a[start:stop]`` of a 1-D tensor."""
    a = as_tensor(a)
    n = a.shape[0]
    return _make(
        a.data[start:stop].copy(), (a,), lambda g: (_pad(g, start, n),), "segment"
    )


def _pad(a, start, n):
    a = as_tensor(a)
    stop = start + a.shape[0]
    data = np.zeros(n)
    data[start:stop] = a.data
    return _make(data, (a,), lambda g: (segment(g, start, stop),), "pad")


def take(a, idx):
    """Gather from the flattened ``a``; negative indices read as zero."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    in_shape, n = a.shape, a.size
    data = kernels.gather(a.data, idx)
    return _make(
        data, (a,), lambda g: (reshape(put(g, idx, n), in_shape),), "take"
    )


def put(a, idx, n):
    """Scatter-add ``a`` into a zero vector of length ``n`` (adjoint of take)."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    data = kernels.scatter_add(a.data, idx, n)
    return _make(data, (a,), lambda g: (take(g, idx),), "put")


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def log_softmax(logits):
    shift = Tensor(logits.data.max(axis=1, keepdims=True))
    z = logits - shift
    return z - tlog(texp(z).sum(axis=1, keepdims=True))


def cross_entropy(logits, labels, reduction="mean"):
    """Softmax cross-entropy of ``(N, K)`` logits against integer labels."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.shape
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    per_sample = neg((log_softmax(logits) * Tensor(onehot)).sum(axis=1))
    if reduction == "none":
        return per_sample
    if reduction == "sum":
        return per_sample.sum()
    return per_sample.mean()


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------


def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(node._parents):
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def grad(output, inputs, grad_output=None, create_graph=False):
    """Gradients of ``output`` with respect to each tensor in ``inputs``.

    ``output`` must be a scalar unless ``grad_output`` is given. Inputs that
    ``output`` does not depend on get a zero gradient; an ``output`` recorded
    without any graph (e.g. under :func:`no_grad`) is an error. With
    ``create_graph=True`` the returned gradients are themselves part of the
    graph and can be differentiated again.
    """
    single = isinstance(inputs, Tensor)
    inputs = [inputs] if single else list(inputs)
    if grad_output is None:
        if output.size != 1:
            raise ValueError(f"grad needs a scalar output, got shape {output.shape}")
        grad_output = Tensor(np.ones_like(output.data))
    grad_output = as_tensor(grad_output)

    grads = {}
    keep = {id(x) for x in inputs}
    if output.requires_grad:
        grads[id(output)] = grad_output
        with _grad_mode(create_graph):
            for node in reversed(_toposort(output)):
                key = id(node)
                g = grads.get(key) if key in keep else grads.pop(key, None)
                if g is None or node._backward is None:
                    continue
                for parent, pg in zip(node._parents, node._backward(g)):
                    if pg is None or not parent.requires_grad:
                        continue
                    pkey = id(parent)
                    grads[pkey] = pg if pkey not in grads else add(grads[pkey], pg)
    elif any(output is x for x in inputs):
        grads[id(output)] = grad_output
    else:
        raise ValueError("output has no recorded graph; run the forward pass with gradients enabled first")

    result = []
    for x in inputs:
        g = grads.get(id(x))
        result.append(g if g is not None else Tensor(np.zeros_like(x.data)))
    return result[0] if single else result


def value_and_grad(fn, theta):
    """Return ``(fn(theta), d fn / d theta)`` as ``(float, ndarray)``."""
    t = Tensor(np.array(theta, dtype=np.float64), requires_grad=True)
    with enable_grad():
        loss = fn(t)
    g = grad(loss, t)
    return loss.item(), g.data


def hessian_vector_product(fn, theta, v):
    """Exact ``H v`` for the Hessian of scalar ``fn`` at ``theta``.

    Computed by differentiating ``<grad fn(theta), v>`` a second time.
    """
    theta = np.asarray(theta, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != theta.shape:
        raise ValueError(f"direction shape {v.shape} does not match parameters {theta.shape}")
    t = Tensor(theta.copy(), requires_grad=True)
    with enable_grad():
        loss = fn(t)
        g = grad(loss, t, create_graph=True)
        gv = (g * Tensor(v)).sum()
    return grad(gv, t).data
