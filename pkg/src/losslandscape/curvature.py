"""Extremal Hessian eigenvalues and eigenvalue-ratio maps over a parameter plane.

Eigenvalues come from a single Lanczos run with full reorthogonalization:
the smallest and largest Ritz values of the tridiagonal matrix estimate
both ends of the spectrum at once.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .directions import Direction
from .models import ParamVector
from .surface import AxisSpec, digest

__all__ = [
    "LanczosSettings",
    "LanczosResult",
    "EigRatioMap",
    "NonSymmetricOperatorError",
    "lanczos_extremal",
    "extremal_eigenvalues",
    "weight_restricted_hvp",
    "ratio_map",
]


class NonSymmetricOperatorError(ValueError):
    """The Hessian-vector oracle failed the probe symmetry test."""


@dataclass(frozen=True)
class LanczosSettings:
    iterations: int | None = None  # None means min(dim, 100)
    tol: float = 1e-6
    seed: int = 0
    max_restarts: int = 5
    symmetry_tol: float = 1e-6

    def __post_init__(self):
        if self.iterations is not None and self.iterations < 1:
            raise ValueError(f"need at least one Lanczos iteration, got {self.iterations}")
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")

    def to_meta(self):
        return {
            "lanczos_iterations": "auto" if self.iterations is None else str(self.iterations),
            "lanczos_reorth": "full",
            "lanczos_tol": repr(self.tol),
            "lanczos_seed": str(self.seed),
        }


@dataclass
class LanczosResult:
    lmin: float
    lmax: float
    residual_min: float
    residual_max: float
    iterations: int
    restarts: int
    vec_min: np.ndarray = field(repr=False, default=None)
    vec_max: np.ndarray = field(repr=False, default=None)


def _check_symmetry(hvp, dim, rng, tol):
    u = rng.standard_normal(dim)
    v = rng.standard_normal(dim)
    hu, hv = np.asarray(hvp(u), dtype=np.float64), np.asarray(hvp(v), dtype=np.float64)
    if hu.shape != (dim,) or hv.shape != (dim,):
        raise ValueError(f"oracle returned shape {hu.shape}, expected ({dim},)")
    a, b = float(u @ hv), float(v @ hu)
    scale = max(np.linalg.norm(u) * np.linalg.norm(hv), np.linalg.norm(v) * np.linalg.norm(hu))
    if scale > 0 and abs(a - b) > tol * scale:
        raise NonSymmetricOperatorError(f"u'Hv = {a!r} but v'Hu = {b!r}")


def _fresh_vector(basis, rng, dim):
    """Unit vector orthogonal to ``basis`` (rows), or None if the basis is full."""
    for _ in range(3):
        r = rng.standard_normal(dim)
        for _ in range(2):
            r -= basis.T @ (basis @ r)
        nr = np.linalg.norm(r)
        if nr > 1e-8 * np.sqrt(dim):
            return r / nr
    return None


def _tridiagonal_run(hvp, dim, k, rng, max_restarts):
    basis = np.zeros((k, dim))
    alpha = np.zeros(k)
    beta = np.zeros(k)  # beta[j] couples vectors j and j + 1
    q = rng.standard_normal(dim)
    q /= np.linalg.norm(q)
    restarts = 0
    m = 0
    scale = 0.0
    for j in range(k):
        basis[j] = q
        w = np.asarray(hvp(q), dtype=np.float64)
        alpha[j] = q @ w
        w = w - alpha[j] * q
        if j > 0:
            w -= beta[j - 1] * basis[j - 1]
        # reorthogonalize twice against every previous vector
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
        m = j + 1
        b = float(np.linalg.norm(w))
        scale = max(scale, abs(alpha[j]), b)
        if m == k:
            beta[j] = b
            break
        if b <= 1e-10 * max(scale, 1e-300):
            # invariant subspace found; continue the basis from a new random vector
            if restarts >= max_restarts:
                beta[j] = 0.0
                break
            nxt = _fresh_vector(basis[:m], rng, dim)
            if nxt is None:
                beta[j] = 0.0
                break
            restarts += 1
            beta[j] = 0.0
            q = nxt
        else:
            beta[j] = b
            q = w / b
    return basis[:m], alpha[:m], beta[:m], restarts


def lanczos_extremal(hvp, dim, k=None, seed=0, tol=1e-6, max_restarts=5, symmetry_tol=1e-6):
    """Smallest and largest eigenvalue of the symmetric operator ``hvp``.

    Residuals ``||Hy - ty||`` of both Ritz pairs are measured with one extra
    operator application each and reported relative to the spectral scale
    ``max(|lmin|, |lmax|)``. If the smallest pair misses ``tol`` the run is
    repeated on ``-H`` and the better estimate kept.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("dimension must be positive")
    k = min(dim, 100) if k is None else int(k)
    if not 1 <= k <= dim:
        raise ValueError(f"need 1 <= k <= dim, got k={k}, dim={dim}")
    rng = np.random.Generator(np.random.PCG64(seed))
    _check_symmetry(hvp, dim, rng, symmetry_tol)

    res = _extremal_pass(hvp, dim, k, rng, max_restarts)
    if res.residual_min > tol:
        flipped = _extremal_pass(lambda v: -np.asarray(hvp(v)), dim, k, rng, max_restarts)
        # the largest eigenvalue of -H is the smallest of H
        if flipped.residual_max < res.residual_min:
            res.lmin = -flipped.lmax
            res.residual_min = flipped.residual_max
            res.vec_min = flipped.vec_max
    if res.residual_max > tol:
        flipped = _extremal_pass(lambda v: -np.asarray(hvp(v)), dim, k, rng, max_restarts)
        if flipped.residual_min < res.residual_max:
            res.lmax = -flipped.lmin
            res.residual_max = flipped.residual_min
            res.vec_max = flipped.vec_min
    return res


def _extremal_pass(hvp, dim, k, rng, max_restarts):
    basis, alpha, beta, restarts = _tridiagonal_run(hvp, dim, k, rng, max_restarts)
    m = len(alpha)
    t = np.diag(alpha) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    evals, evecs = np.linalg.eigh(t)
    y_min = basis.T @ evecs[:, 0]
    y_max = basis.T @ evecs[:, -1]
    y_min /= np.linalg.norm(y_min)
    y_max /= np.linalg.norm(y_max)
    lmin, lmax = float(evals[0]), float(evals[-1])
    scale = max(abs(lmin), abs(lmax))
    if scale == 0.0:
        r_min = r_max = 0.0
    else:
        r_min = float(np.linalg.norm(np.asarray(hvp(y_min)) - lmin * y_min)) / scale
        r_max = float(np.linalg.norm(np.asarray(hvp(y_max)) - lmax * y_max)) / scale
    return LanczosResult(lmin, lmax, r_min, r_max, m, restarts, y_min, y_max)


def extremal_eigenvalues(hvp, dim, settings=None):
    s = settings or LanczosSettings()
    return lanczos_extremal(hvp, dim, s.iterations, s.seed, s.tol, s.max_restarts, s.symmetry_tol)


def weight_restricted_hvp(objective, theta, mask):
    """Hessian-vector product over the entries selected by ``mask`` only."""
    raw = theta.data if isinstance(theta, ParamVector) else np.asarray(theta, dtype=np.float64)
    idx = np.flatnonzero(mask)
    full = np.zeros(raw.shape)

    def hvp(v):
        full[:] = 0.0
        full[idx] = v
        return objective.hvp(raw, full)[idx]

    return hvp, len(idx)


@dataclass
class EigRatioMap:
    """Per-cell extremal eigenvalues over a plane; ``ratio = |lmin / lmax|``.

    ``ratio`` is NaN where ``lmax`` is exactly 0.
    """

    axes: tuple
    lmin: np.ndarray
    lmax: np.ndarray
    ratio: np.ndarray
    meta: dict = field(default_factory=dict)
    residuals: np.ndarray | None = None

    @property
    def shape(self):
        return tuple(a.steps for a in self.axes)

    @property
    def coords(self):
        return tuple(a.points() for a in self.axes)

    @property
    def values(self):
        return {"lmin": self.lmin, "lmax": self.lmax, "ratio": self.ratio}


def _ratio(lmin, lmax):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(lmax != 0, np.abs(lmin / np.where(lmax != 0, lmax, 1.0)), np.nan)


def ratio_map(center, dx, dy, axes, objective, settings=None, mask=None, workers=1, companion=None):
    """Extremal Hessian eigenvalues at every cell of ``center + a*dx + b*dy``.

    The Hessian is taken with respect to weight-kind entries only when the
    center carries a layout (``mask`` overrides this). ``companion`` is a
    :class:`LossGrid` over the same plane; its axes must match.
    """
    settings = settings or LanczosSettings()
    ax, ay = (AxisSpec.parse(a) if isinstance(a, str) else a for a in axes)
    if companion is not None and tuple(companion.axes) != (ax, ay):
        raise ValueError(f"axes {ax}, {ay} do not match the companion grid axes {companion.axes}")
    raw = lambda x: x.data if isinstance(x, (ParamVector, Direction)) else np.asarray(x, dtype=np.float64)
    c, u, v = raw(center), raw(dx), raw(dy)
    if not c.shape == u.shape == v.shape:
        raise ValueError(f"shape mismatch: center {c.shape}, directions {u.shape}, {v.shape}")
    if mask is None:
        mask = center.layout.weight_mask if isinstance(center, ParamVector) else np.ones(c.shape, dtype=bool)
    xs, ys = ax.points(), ay.points()

    def run(cell):
        theta = c + xs[cell[0]] * u + ys[cell[1]] * v
        hvp, dim = weight_restricted_hvp(objective, theta, mask)
        r = extremal_eigenvalues(hvp, dim, settings)
        return r.lmin, r.lmax, max(r.residual_min, r.residual_max)

    cells = list(np.ndindex(ax.steps, ay.steps))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(run, cells))
    else:
        out = [run(cell) for cell in cells]
    out = np.array(out, dtype=np.float64).reshape(ax.steps, ay.steps, 3)
    lmin, lmax = out[..., 0].copy(), out[..., 1].copy()
    meta = {"kind": "eigmap", "center": digest(c), "hessian": "weights"}
    meta.update(settings.to_meta())
    for prefix, d in (("x_", dx), ("y_", dy)):
        if isinstance(d, Direction):
            meta.update(d.meta(prefix))
    return EigRatioMap((ax, ay), lmin, lmax, _ratio(lmin, lmax), meta, out[..., 2].copy())

