"""PCA of optimizer trajectories and the loss surface over the PCA plane.

Every checkpoint is expressed relative to the final one, ``theta_i - theta_n``,
over weight-kind entries. The principal axes are the top right singular
vectors of that difference matrix (no mean removal: the final point is the
origin of the plot).
"""
from dataclasses import dataclass, field

import numpy as np

from .directions import Direction, filter_normalize, random_direction
from .models import ParamVector
from .surface import AxisSpec, grid_2d, ray_1d

__all__ = [
    "PCAProjection",
    "TrajectorySurface",
    "difference_matrix",
    "pca_directions",
    "project",
    "captured_variance",
    "random_orthonormal_pair",
    "trajectory_surface",
    "surface_directions",
    "plane_coordinates",
    "fit_axis",
]


@dataclass
class PCAProjection:
    """Two principal axes of a trajectory and its coordinates in them.

    ``axes`` is ``(2, n_weights)`` with orthonormal rows (a degenerate row is
    all zeros). ``coords[i]`` is checkpoint ``i`` in that basis.
    """

    axes: np.ndarray
    singular_values: np.ndarray
    explained: np.ndarray
    coords: np.ndarray
    epochs: list
    lr_drop_epochs: list = field(default_factory=list)
    degenerate: tuple = (False, False)
    template: ParamVector | None = None

    @property
    def captured(self):
        return float(self.explained.sum())

    def direction(self, k):
        """Axis ``k`` as a full-size :class:`Direction` (zeros off the weights)."""
        if self.template is None:
            raise ValueError("projection was built without a parameter template")
        layout = self.template.layout
        data = np.zeros(layout.size)
        data[layout.weight_mask] = self.axes[k]
        return Direction(data, layout, "none", "biasbn", None, "weights")


def _weights(record):
    if hasattr(record, "weight_matrix"):
        return record.weight_matrix()
    return np.asarray(record, dtype=np.float64)


def difference_matrix(record):
    """Rows ``theta_i - theta_n`` for every checkpoint but the last."""
    w = _weights(record)
    if w.ndim != 2 or len(w) < 1:
        raise ValueError("need a (checkpoints, weights) matrix")
    return w[:-1] - w[-1]


def _sign_fix(v):
    # largest-magnitude component positive, so axes are reproducible
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def pca_directions(record, n_axes=2):
    """Top principal axes of the trajectory via the small Gram matrix."""
    w = _weights(record)
    if len(w) < 3:
        raise ValueError(f"PCA needs at least 3 checkpoints, got {len(w)}")
    m = w[:-1] - w[-1]
    gram = m @ m.T
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    total = float(np.sum(m * m))
    sv = np.sqrt(evals)
    # Gram eigenvalues carry absolute error ~ eps * sigma_1^2, so the rank
    # cutoff is applied to them rather than to the singular values
    cutoff = evals[0] * max(m.shape) * np.finfo(np.float64).eps
    axes = np.zeros((n_axes, m.shape[1]))
    degenerate = []
    for k in range(n_axes):
        if k < len(sv) and evals[k] > cutoff and evals[k] > 0:
            v = m.T @ evecs[:, k] / sv[k]
            # one Gram-Schmidt pass against earlier axes cleans up rounding
            for j in range(k):
                v -= (axes[j] @ v) * axes[j]
            axes[k] = _sign_fix(v / np.linalg.norm(v))
            degenerate.append(False)
        else:
            degenerate.append(True)
    svals = np.array([sv[k] if k < len(sv) and not degenerate[k] else 0.0 for k in range(n_axes)])
    explained = svals**2 / total if total > 0 else np.zeros(n_axes)
    template = record.final if hasattr(record, "final") else None
    epochs = list(record.epochs) if hasattr(record, "epochs") else list(range(len(w)))
    drops = list(record.lr_drop_epochs) if hasattr(record, "lr_drop_epochs") else []
    coords = project(w, axes)
    return PCAProjection(axes, svals, explained, coords, epochs, drops, tuple(degenerate), template)


def project(record, axes):
    """``(n_checkpoints, n_axes)`` coordinates of ``theta_i - theta_n``; the last row is 0."""
    w = _weights(record)
    axes = np.atleast_2d(np.asarray(axes, dtype=np.float64))
    if axes.shape[1] != w.shape[1]:
        raise ValueError(f"axes have dimension {axes.shape[1]}, trajectory has {w.shape[1]}")
    return (w - w[-1]) @ axes.T


def captured_variance(record, axes):
    """Fraction of ``||M||_F^2`` captured by orthonormal ``axes``."""
    m = difference_matrix(record)
    total = float(np.sum(m * m))
    if total == 0:
        return 0.0
    c = m @ np.atleast_2d(axes).T
    return float(np.sum(c * c) / total)


def random_orthonormal_pair(dim, seed):
    """Gaussian pair orthonormalized with QR."""
    rng = np.random.Generator(np.random.PCG64(seed))
    q, r = np.linalg.qr(rng.standard_normal((dim, 2)))
    return (q * np.sign(np.diag(r))).T


@dataclass
class TrajectorySurface:
    """Loss over the PCA plane plus the path drawn on it.

    ``coords`` are exact coordinates in the orthonormal PCA basis.
    ``plane_coords`` are least-squares coordinates in the (filter-normalized)
    directions the surface was evaluated along, so they line up with ``grid``.
    """

    grid: object
    coords: np.ndarray
    plane_coords: np.ndarray
    epochs: list
    lr_drop: np.ndarray
    explained: np.ndarray
    meta: dict = field(default_factory=dict)


def fit_axis(values, steps, margin=0.25):
    """Symmetric-ish axis covering ``values`` and 0 with some margin."""
    lo, hi = min(0.0, float(np.min(values))), max(0.0, float(np.max(values)))
    span = hi - lo
    if span == 0:
        return AxisSpec(-1.0, 1.0, steps)
    return AxisSpec(lo - margin * span, hi + margin * span, steps)


def surface_directions(record, pca, seed=0):
    """Directions a trajectory surface is evaluated along.

    Filter-normalized copies of the non-degenerate PCA axes, or a seeded
    random pair when the trajectory never moves.
    """
    center = record.final
    if pca.degenerate[0]:
        return [random_direction(center, seed), random_direction(center, seed + 1)]
    dirs = [filter_normalize(pca.direction(0), center)]
    if not pca.degenerate[1]:
        dirs.append(filter_normalize(pca.direction(1), center))
    return dirs


def plane_coordinates(record, dirs):
    """Least-squares coordinates of every ``theta_i - theta_n`` in ``dirs``."""
    w = record.weight_matrix()
    mask = record.final.layout.weight_mask
    basis = np.stack([d.data[mask] for d in dirs], axis=1)
    diff = (w - w[-1]).T
    if not np.any(diff):
        return np.zeros((len(w), len(dirs)))
    return np.linalg.lstsq(basis, diff, rcond=None)[0].T


def trajectory_surface(record, pca, axes, train, test=None, workers=1, seed=0):
    """Surface over the PCA plane centred at the final checkpoint.

    The surface directions are filter-normalized copies of the PCA axes. A
    degenerate second axis (or a single axis spec) gives a 1-D profile; a
    trajectory that never moves gets seeded random directions with every
    path point at the origin.
    """
    center = record.final
    epochs = list(record.epochs)
    drops = set(record.lr_drop_epochs)
    lr_drop = np.array([e in drops for e in epochs])
    meta = {
        "pca_explained_1": repr(float(pca.explained[0])),
        "pca_explained_2": repr(float(pca.explained[1])),
        "pca_projection": "orthonormal",
        "surface_directions": "filter-normalized pca",
    }
    if pca.degenerate[0]:
        meta["surface_directions"] = "random (trajectory has no extent)"
    if isinstance(axes, (str, AxisSpec)):
        axes = (axes,)
    axes = tuple(AxisSpec.parse(a) if isinstance(a, str) else a for a in axes)

    dirs = surface_directions(record, pca, seed)
    if len(dirs) == 1 or len(axes) == 1:
        dirs = dirs[:1]
        grid = ray_1d(center, dirs[0], axes[0], train, test, workers)
    else:
        grid = grid_2d(center, dirs[0], dirs[1], axes[:2], train, test, workers)
    grid.meta.update(meta)

    coords = np.zeros((len(epochs), 2))
    coords[:, : pca.coords.shape[1]] = pca.coords
    plane = plane_coordinates(record, dirs)
    return TrajectorySurface(grid, coords, plane, epochs, lr_drop, pca.explained.copy(), meta)
