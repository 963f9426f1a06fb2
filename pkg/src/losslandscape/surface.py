"""Loss evaluated along lines and planes through parameter space."""
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .directions import Direction, random_direction
from .models import ParamVector

__all__ = [
    "AxisSpec",
    "LossGrid",
    "LOSS_COLUMNS",
    "OVERFLOW_SENTINEL",
    "interpolate_1d",
    "ray_1d",
    "grid_2d",
    "repeat_study",
    "digest",
]

LOSS_COLUMNS = ("train_loss", "train_err", "test_loss", "test_err")
# stored in place of non-finite losses; such cells are also flagged in LossGrid.overflow
OVERFLOW_SENTINEL = 1e300

DEFAULT_AXIS_1D = "-1:1:401"
DEFAULT_AXIS_2D = "-1:1:51"


@dataclass(frozen=True)
class AxisSpec:
    min: float
    max: float
    steps: int

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"axis needs min < max, got {self.min}:{self.max}")
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError(f"axis needs an integer step count >= 2, got {self.steps}")
        object.__setattr__(self, "min", float(self.min))
        object.__setattr__(self, "max", float(self.max))
        object.__setattr__(self, "steps", int(self.steps))

    @classmethod
    def parse(cls, text):
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ValueError(f"axis must look like min:max:steps, got {text!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"axis must look like min:max:steps, got {text!r}") from None
        return cls(lo, hi, n)

    def __str__(self):
        return f"{self.min!r}:{self.max!r}:{self.steps}"

    def points(self):
        p = np.linspace(self.min, self.max, self.steps)
        # grid points that should be exactly 0 (the center) are snapped to it
        p[np.abs(p) < 1e-12 * (self.max - self.min)] = 0.0
        if self.min == -self.max:
            # make symmetric axes exactly symmetric so that +d and -d sweeps mirror bitwise
            half = self.steps // 2
            p[self.steps - half :] = -p[:half][::-1]
        return p

    @property
    def step(self):
        return (self.max - self.min) / (self.steps - 1)


@dataclass
class LossGrid:
    """Loss and error over a 1-D or 2-D grid of coordinates.

    ``values[name]`` has shape ``(nx,)`` or ``(nx, ny)``; index ``[i, j]``
    is the point ``(x[i], y[j])``.
    """

    axes: tuple
    values: dict
    meta: dict = field(default_factory=dict)
    overflow: np.ndarray | None = None

    def __post_init__(self):
        shape = self.shape
        for name, v in self.values.items():
            if v.shape != shape:
                raise ValueError(f"column {name} has shape {v.shape}, axes give {shape}")
        if self.overflow is None:
            self.overflow = np.zeros(shape, dtype=bool)

    @property
    def shape(self):
        return tuple(a.steps for a in self.axes)

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def coords(self):
        return tuple(a.points() for a in self.axes)

    @property
    def loss(self):
        return self.values["train_loss"]

    @property
    def error(self):
        return self.values["train_err"]

    def center_index(self):
        """Grid index of the origin; every axis must contain 0."""
        idx = []
        for a in self.axes:
            p = a.points()
            k = int(np.argmin(np.abs(p)))
            if p[k] != 0.0:
                raise ValueError(f"axis {a} does not contain 0")
            idx.append(k)
        return tuple(idx)


def digest(theta):
    raw = theta.data if isinstance(theta, (ParamVector, Direction)) else np.asarray(theta, dtype=np.float64)
    return hashlib.sha256(np.ascontiguousarray(raw, dtype="<f8").tobytes()).hexdigest()[:16]


def _raw(x):
    return x.data if isinstance(x, (ParamVector, Direction)) else np.asarray(x, dtype=np.float64)


def _sweep(point_fn, shape, train, test, workers):
    cells = list(np.ndindex(*shape))

    def run(cell):
        theta = point_fn(cell)
        tl, te = train.evaluate(theta)
        vl, ve = test.evaluate(theta) if test is not None else (np.nan, np.nan)
        return tl, te, vl, ve

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    out = np.array(results, dtype=np.float64).reshape(*shape, 4)
    values = {name: out[..., k].copy() for k, name in enumerate(LOSS_COLUMNS)}
    overflow = np.zeros(shape, dtype=bool)
    for name in ("train_loss",) if test is None else ("train_loss", "test_loss"):
        v = values[name]
        bad = ~np.isfinite(v)
        v[bad] = OVERFLOW_SENTINEL
        overflow |= bad
    return values, overflow


def _base_meta(kind, center, train, test):
    meta = {
        "kind": kind,
        "center": digest(center),
        "split": train.split if test is None else f"{train.split}+{test.split}",
        "model_spec": getattr(train, "spec_hash", ""),
    }
    return meta


def _check_dims(center, *dirs):
    n = _raw(center).shape
    for d in dirs:
        if _raw(d).shape != n:
            raise ValueError(f"direction has shape {_raw(d).shape}, parameters have {n}")


def interpolate_1d(theta_a, theta_b, axis, train, test=None, dir_type="weights", workers=1):
    """Loss along ``(1 - alpha) * theta_a + alpha * theta_b``.

    With ``dir_type="weights"`` the BN running buffers stay at ``theta_a``'s
    values; ``"states"`` interpolates them too, which is what makes the
    endpoints reproduce each minimizer exactly for batch-norm models.
    """
    if isinstance(axis, str):
        axis = AxisSpec.parse(axis)
    if isinstance(theta_a, ParamVector) and isinstance(theta_b, ParamVector):
        if theta_a.layout.spec_hash != theta_b.layout.spec_hash:
            raise ValueError("cannot interpolate between parameters of different model specs")
        layout = theta_a.layout
        running = layout.mask("bn-running-stat")
        if dir_type == "weights":
            moving = ~running
        elif dir_type == "states":
            moving = np.ones(layout.size, dtype=bool)
        else:
            raise ValueError(f"dir_type must be weights or states, got {dir_type!r}")
    else:
        moving = np.ones(_raw(theta_a).shape, dtype=bool)
    a, b = _raw(theta_a), _raw(theta_b)
    if a.shape != b.shape:
        raise ValueError(f"endpoint shapes differ: {a.shape} vs {b.shape}")
    alphas = axis.points()
    alphas[np.abs(alphas - 1.0) < 1e-12 * (axis.max - axis.min)] = 1.0

    def point(cell):
        al = alphas[cell[0]]
        if al == 1.0:
            out = b.copy()
            out[~moving] = a[~moving]
            return out
        out = a.copy()
        out[moving] = a[moving] + al * (b[moving] - a[moving])
        return out

    values, overflow = _sweep(point, (axis.steps,), train, test, workers)
    meta = _base_meta("interp1d", theta_a, train, test)
    meta.update({"endpoint_b": digest(theta_b), "dir_type": dir_type})
    return LossGrid((axis,), values, meta, overflow)


def ray_1d(center, direction, axis, train, test=None, workers=1):
    """Loss along ``center + alpha * direction``."""
    if isinstance(axis, str):
        axis = AxisSpec.parse(axis)
    _check_dims(center, direction)
    c, d = _raw(center), _raw(direction)
    alphas = axis.points()
    values, overflow = _sweep(lambda cell: c + alphas[cell[0]] * d, (axis.steps,), train, test, workers)
    meta = _base_meta("ray1d", center, train, test)
    if isinstance(direction, Direction):
        meta.update(direction.meta("x_"))
    return LossGrid((axis,), values, meta, overflow)


def grid_2d(center, dx, dy, axes, train, test=None, workers=1):
    """Loss over the plane ``center + alpha * dx + beta * dy``."""
    ax, ay = (AxisSpec.parse(a) if isinstance(a, str) else a for a in axes)
    _check_dims(center, dx, dy)
    if (
        isinstance(dx, Direction)
        and isinstance(dy, Direction)
        and dx.seed is not None
        and dx.seed == dy.seed
    ):
        raise ValueError(f"both directions were drawn with seed {dx.seed}; the plane is degenerate")
    c, u, v = _raw(center), _raw(dx), _raw(dy)
    xs, ys = ax.points(), ay.points()
    values, overflow = _sweep(
        lambda cell: c + xs[cell[0]] * u + ys[cell[1]] * v, (ax.steps, ay.steps), train, test, workers
    )
    meta = _base_meta("grid2d", center, train, test)
    for prefix, d in (("x_", dx), ("y_", dy)):
        if isinstance(d, Direction):
            meta.update(d.meta(prefix))
    return LossGrid((ax, ay), values, meta, overflow)


def repeat_study(center, axes, train, test=None, n_seeds=10, seeds=None, scheme="filter",
                 ignore="biasbn", dir_type="weights", workers=1):
    """One surface per seed around the same center (1-D or 2-D by ``axes``).

    2-D studies draw the y direction from ``seed + 1_000_003``.
    """
    if isinstance(axes, (str, AxisSpec)):
        axes = (axes,)
    axes = tuple(AxisSpec.parse(a) if isinstance(a, str) else a for a in axes)
    if seeds is None:
        if n_seeds < 2:
            raise ValueError("a repeat study needs at least 2 seeds")
        seeds = list(range(1, n_seeds + 1))
    grids = []
    for s in seeds:
        dx = random_direction(center, s, scheme, ignore, dir_type)
        if len(axes) == 1:
            g = ray_1d(center, dx, axes[0], train, test, workers)
        else:
            dy = random_direction(center, s + 1_000_003, scheme, ignore, dir_type)
            g = grid_2d(center, dx, dy, axes, train, test, workers)
        g.meta["repeat_seed"] = str(s)
        grids.append(g)
    return grids
