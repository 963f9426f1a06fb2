"""Random directions in parameter space and their normalization schemes.

``filter`` rescales each filter of a direction to the norm of the matching
filter of the reference parameters; ``layer`` does the same per layer;
``none`` leaves the raw Gaussian draw alone.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .models import Layout, ParamVector

__all__ = [
    "Direction",
    "RNG_NAME",
    "SCHEMES",
    "IGNORE_POLICIES",
    "sample_gaussian",
    "filter_normalize",
    "layer_normalize",
    "normalize",
    "random_direction",
    "cosine_similarity",
]

RNG_NAME = "numpy.random.PCG64"
SCHEMES = ("none", "filter", "layer")
IGNORE_POLICIES = ("biasbn", "none")
DIR_TYPES = ("weights", "states")


@dataclass
class Direction:
    data: np.ndarray
    layout: Layout
    scheme: str = "none"
    ignore: str = "biasbn"
    seed: int | None = None
    dir_type: str = "weights"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (self.layout.size,):
            raise ValueError(f"direction has shape {self.data.shape}, layout expects ({self.layout.size},)")

    @property
    def norm(self):
        return float(np.linalg.norm(self.data))

    def _replace(self, data, scheme):
        return Direction(data, self.layout, scheme, self.ignore, self.seed, self.dir_type)

    def __neg__(self):
        return self._replace(-self.data, self.scheme)

    def meta(self, prefix=""):
        return {
            f"{prefix}scheme": self.scheme,
            f"{prefix}ignore": self.ignore,
            f"{prefix}seed": "none" if self.seed is None else str(self.seed),
            f"{prefix}dir_type": self.dir_type,
            f"{prefix}rng": RNG_NAME,
        }


def _included_kinds(ignore, dir_type):
    if ignore not in IGNORE_POLICIES:
        raise ValueError(f"ignore policy must be one of {IGNORE_POLICIES}, got {ignore!r}")
    if dir_type not in DIR_TYPES:
        raise ValueError(f"dir_type must be one of {DIR_TYPES}, got {dir_type!r}")
    if ignore == "biasbn":
        return ("weight",)
    kinds = ("weight", "bias", "bn-scale", "bn-shift")
    return kinds + ("bn-running-stat",) if dir_type == "states" else kinds


def sample_gaussian(template, seed, ignore="biasbn", dir_type="weights"):
    """Standard normal entries on included positions, exact zeros elsewhere."""
    layout = template.layout if isinstance(template, (ParamVector, Direction)) else template
    mask = layout.mask(*_included_kinds(ignore, dir_type))
    rng = np.random.Generator(np.random.PCG64(seed))
    data = rng.standard_normal(layout.size)
    data[~mask] = 0.0
    return Direction(data, layout, "none", ignore, seed, dir_type)


def _rescale_groups(d, theta, granularity):
    if d.layout != theta.layout:
        raise ValueError("direction and parameters come from different layouts")
    kinds = _included_kinds(d.ignore, d.dir_type)
    starts, stops = d.layout.groups(granularity, kinds)
    d_norm = np.sqrt(kernels.segment_sq_sums(d.data, starts, stops))
    t_norm = np.sqrt(kernels.segment_sq_sums(theta.data, starts, stops))
    # degenerate groups (zero direction or zero reference) collapse to zero
    ok = (d_norm > 0) & (t_norm > 0)
    factor = np.where(ok, t_norm / np.where(ok, d_norm, 1.0), 0.0)
    out = d.data.copy()
    for f, a, b in zip(factor, starts, stops):
        out[a:b] *= f
    return out


def filter_normalize(d, theta):
    """Rescale every filter of ``d`` to the norm of the same filter in ``theta``."""
    return d._replace(_rescale_groups(d, theta, "filter"), "filter")


def layer_normalize(d, theta):
    """Rescale every layer of ``d`` to the norm of the same layer in ``theta``."""
    return d._replace(_rescale_groups(d, theta, "layer"), "layer")


def normalize(d, theta, scheme):
    if scheme == "filter":
        return filter_normalize(d, theta)
    if scheme == "layer":
        return layer_normalize(d, theta)
    if scheme == "none":
        return d._replace(d.data.copy(), "none")
    raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


def random_direction(theta, seed, scheme="filter", ignore="biasbn", dir_type="weights"):
    """Sample and normalize in one go."""
    return normalize(sample_gaussian(theta, seed, ignore, dir_type), theta, scheme)


def cosine_similarity(a, b):
    a = a.data if isinstance(a, (Direction, ParamVector)) else np.asarray(a, dtype=np.float64)
    b = b.data if isinstance(b, (Direction, ParamVector)) else np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
