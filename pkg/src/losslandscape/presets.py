"""The standard two-moons setup used by the CLI defaults and the batch-size study.

The MLP is wide enough that its initial weight norm exceeds what fitting the
data needs, so weight decay visibly shrinks the small-batch run (many
updates) while the large-batch run (one update per epoch) barely moves.
"""
from .directions import random_direction
from .models import mlp_spec
from .render import width_summary
from .surface import ray_1d
from .trainer import TrainConfig

__all__ = [
    "STANDARD_DATA",
    "STANDARD_MODEL",
    "STANDARD_TRAINING",
    "SMALL_BATCH",
    "LARGE_BATCH",
    "WIDTH_AXIS",
    "WIDTH_SEEDS",
    "WIDTH_OFFSET",
    "standard_spec",
    "standard_config",
    "profile_widths",
]

STANDARD_DATA = {"kind": "two-moons", "n_train": 512, "n_test": 10000, "noise": 0.1, "seed": 0}
STANDARD_MODEL = {"depth": 3, "width": 128}
STANDARD_TRAINING = {"lr": 0.1, "momentum": 0.9, "epochs": 60, "lr_drops": ()}
SMALL_BATCH = 16
LARGE_BATCH = 512

# flatness is summarized as the mean width over a few filter-normalized rays
WIDTH_AXIS = "-2:2:401"
WIDTH_SEEDS = (1001, 1002, 1003, 1004, 1005)
WIDTH_OFFSET = 0.5


def standard_spec():
    return mlp_spec(2, 2, STANDARD_MODEL["depth"], STANDARD_MODEL["width"])


def standard_config(batch_size, weight_decay=5e-4, seed=0, epochs=None):
    t = STANDARD_TRAINING
    return TrainConfig(
        "sgd-nesterov", t["lr"], t["momentum"], weight_decay, batch_size,
        t["epochs"] if epochs is None else epochs, t["lr_drops"], 0.1, seed,
    )


def profile_widths(theta, objective, seeds=WIDTH_SEEDS, axis=WIDTH_AXIS, offset=WIDTH_OFFSET):
    """``width_summary`` over one filter-normalized ray per seed."""
    grids = [ray_1d(theta, random_direction(theta, s), axis, objective) for s in seeds]
    return width_summary(grids, offset)
