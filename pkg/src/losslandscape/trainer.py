"""Training harness: SGD with Nesterov momentum or Adam, checkpoint every epoch."""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .models import ParamVector
from .tensor import Tensor, enable_grad, grad

__all__ = [
    "TrainConfig",
    "Checkpoint",
    "TrajectoryRecord",
    "SGD",
    "Adam",
    "make_optimizer",
    "train",
    "weight_norm_series",
    "weight_histogram",
]

log = logging.getLogger(__name__)

OPTIMIZERS = ("sgd-nesterov", "adam")


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "sgd-nesterov"
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 128
    epochs: int = 200
    lr_drops: tuple = ()
    lr_factor: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not self.lr >= 0:
            raise ValueError(f"lr must be non-negative, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {self.weight_decay}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch size must be >= 1 and epochs >= 0")
        drops = tuple(int(e) for e in self.lr_drops)
        if any(b <= a for a, b in zip(drops, drops[1:])):
            raise ValueError(f"lr drop epochs must be strictly increasing, got {drops}")
        object.__setattr__(self, "lr_drops", drops)

    def lr_at(self, epoch):
        """Learning rate used during ``epoch`` (1-based)."""
        n = sum(1 for d in self.lr_drops if epoch > d)
        return self.lr * self.lr_factor**n

    def to_dict(self):
        d = asdict(self)
        d["lr_drops"] = list(self.lr_drops)
        return d


@dataclass
class Checkpoint:
    epoch: int
    params: ParamVector  # weights and BN running buffers together
    train_loss: float = float("nan")
    train_err: float = float("nan")
    test_loss: float = float("nan")
    test_err: float = float("nan")

    @property
    def states(self):
        """BN running statistics only."""
        return self.params.data[self.params.layout.mask("bn-running-stat")]


@dataclass
class TrajectoryRecord:
    checkpoints: list
    config: TrainConfig | None = None
    iteration_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diverged: bool = False

    @property
    def epochs(self):
        return [c.epoch for c in self.checkpoints]

    @property
    def lr_drop_epochs(self):
        if self.config is None:
            return []
        return [e for e in self.config.lr_drops if e in self.epochs]

    @property
    def final(self):
        return self.checkpoints[-1].params

    def weight_matrix(self):
        """``(n_checkpoints, n_weights)`` array of weight-kind entries."""
        return np.stack([c.params.weights for c in self.checkpoints])


class SGD:
    """SGD with optional Nesterov momentum and L2 weight decay on masked entries."""

    def __init__(self, momentum=0.9, nesterov=True, weight_decay=0.0, decay_mask=None):
        self.momentum = momentum
        self.nesterov = nesterov
        self.weight_decay = weight_decay
        self.decay_mask = decay_mask
        self.velocity = None

    def step(self, theta, g, lr):
        if self.weight_decay:
            wd = self.weight_decay * theta
            g = g + (wd if self.decay_mask is None else wd * self.decay_mask)
        if self.momentum:
            if self.velocity is None:
                self.velocity = np.zeros_like(theta)
            self.velocity = self.momentum * self.velocity + g
            g = g + self.momentum * self.velocity if self.nesterov else self.velocity
        return theta - lr * g


class Adam:
    def __init__(self, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0, decay_mask=None):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.decay_mask = decay_mask
        self.m = self.v = None
        self.t = 0

    def step(self, theta, g, lr):
        if self.weight_decay:
            wd = self.weight_decay * theta
            g = g + (wd if self.decay_mask is None else wd * self.decay_mask)
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g * g
        mhat = self.m / (1 - self.beta1**self.t)
        vhat = self.v / (1 - self.beta2**self.t)
        return theta - lr * mhat / (np.sqrt(vhat) + self.eps)


def make_optimizer(config, decay_mask=None):
    mask = None if decay_mask is None else decay_mask.astype(np.float64)
    if config.optimizer == "adam":
        return Adam(weight_decay=config.weight_decay, decay_mask=mask)
    return SGD(config.momentum, True, config.weight_decay, mask)


def _snapshot(model, data, epoch, train_set, test_set):
    theta = ParamVector(data.copy(), model.layout)
    tl, te = model.evaluate(theta, train_set.features, train_set.labels)
    if test_set is not None:
        vl, ve = model.evaluate(theta, test_set.features, test_set.labels)
    else:
        vl = ve = float("nan")
    return Checkpoint(epoch, theta, tl, te, vl, ve)


def train(model, params, train_set, config, test_set=None, on_epoch=None):
    """Train from ``params``; returns a :class:`TrajectoryRecord`.

    Checkpoint 0 is the initialization, then one checkpoint per epoch. A
    non-finite minibatch loss aborts the run; the record then keeps every
    checkpoint taken so far and has ``diverged=True``.
    """
    layout = model.layout
    weight_mask = layout.weight_mask
    running = layout.mask("bn-running-stat")
    opt = make_optimizer(config, weight_mask)
    rng = np.random.default_rng(config.seed)
    x_all, y_all = train_set.features, train_set.labels

    data = params.data.copy()
    checkpoints = [_snapshot(model, data, 0, train_set, test_set)]
    norms = []
    diverged = False
    for epoch in range(1, config.epochs + 1):
        lr = config.lr_at(epoch)
        for idx in train_set.batches(config.batch_size, rng):
            t = Tensor(data, requires_grad=True)
            updates = {}
            with enable_grad():
                loss = model.loss(t, x_all[idx], y_all[idx], train=True, updates=updates)
            if not np.isfinite(loss.data):
                diverged = True
                break
            g = grad(loss, t).data
            g[running] = 0.0
            data = opt.step(data, g, lr)
            for start, values in updates.items():
                data[start : start + len(values)] = values
            norms.append(float(np.linalg.norm(data[weight_mask])))
        if diverged or not np.all(np.isfinite(data)):
            diverged = True
            log.warning("training diverged in epoch %d; keeping %d checkpoints", epoch, len(checkpoints))
            break
        ck = _snapshot(model, data, epoch, train_set, test_set)
        checkpoints.append(ck)
        if on_epoch is not None:
            on_epoch(ck)
    return TrajectoryRecord(checkpoints, config, np.asarray(norms), diverged)


def weight_norm_series(record):
    """``(per_epoch, per_iteration)`` Euclidean norms of the weight-kind entries."""
    per_epoch = np.array([c.params.weight_norm() for c in record.checkpoints])
    return per_epoch, np.asarray(record.iteration_norms, dtype=np.float64)


def weight_histogram(theta, bins=50, range=None):
    """``(counts, edges)`` over weight-kind entries only."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    return np.histogram(theta.weights, bins=bins, range=range)
