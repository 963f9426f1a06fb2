"""Static SVG plots of loss grids, trajectories and weight statistics.

Every renderer is a pure function of its inputs: numbers are written with a
fixed format and nothing depends on time, locale or dict order.
"""
import warnings
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from . import kernels
from .surface import OVERFLOW_SENTINEL

__all__ = [
    "RenderSpec",
    "PLOT_KINDS",
    "EmptyContourWarning",
    "default_levels",
    "contour_lines",
    "contour_svg",
    "heat_svg",
    "line_svg",
    "trajectory_svg",
    "histogram_svg",
    "norm_curve_svg",
    "render",
    "width_at_level",
    "width_summary",
]

PLOT_KINDS = ("line-1d", "contour-2d", "heat-2d", "trajectory-overlay", "histogram", "norm-curve")


class EmptyContourWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RenderSpec:
    kind: str = "contour-2d"
    levels: tuple | None = None  # explicit levels win over n_levels
    n_levels: int = 12
    transform: str = "linear"
    cap: float = 10.0  # default contour levels stop here
    output: str | None = None
    width: int = 480
    height: int = 480

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"plot kind must be one of {PLOT_KINDS}, got {self.kind!r}")
        if self.transform not in ("linear", "log"):
            raise ValueError(f"transform must be linear or log, got {self.transform!r}")
        if self.levels is not None:
            lv = tuple(float(v) for v in self.levels)
            if any(b <= a for a, b in zip(lv, lv[1:])):
                raise ValueError(f"contour levels must be strictly increasing, got {lv}")
            if self.transform == "log" and any(v <= 0 for v in lv):
                raise ValueError("log transform needs positive levels")
            object.__setattr__(self, "levels", lv)
        if self.n_levels < 1:
            raise ValueError("need at least one contour level")


# ---------------------------------------------------------------------------
# widths
# ---------------------------------------------------------------------------


def width_at_level(grid, level, column="train_loss"):
    """Length of the interval around 0 where the 1-D profile stays below ``level``.

    Crossings are located by linear interpolation between grid points; an
    interval that reaches the end of the axis stops there.
    """
    if grid.ndim != 1:
        raise ValueError("width_at_level needs a 1-D grid")
    x = grid.coords[0]
    f = np.where(grid.overflow, np.inf, grid.values[column])
    (c,) = grid.center_index()
    if not f[c] < level:
        raise ValueError(f"center value {f[c]!r} is not below level {level!r}")
    lo = c
    while lo > 0 and f[lo - 1] < level:
        lo -= 1
    hi = c
    while hi < len(f) - 1 and f[hi + 1] < level:
        hi += 1

    def crossing(inside, outside):
        if not np.isfinite(f[outside]):
            return x[inside]
        t = (level - f[inside]) / (f[outside] - f[inside])
        return x[inside] + t * (x[outside] - x[inside])

    left = x[0] if lo == 0 else crossing(lo, lo - 1)
    right = x[-1] if hi == len(f) - 1 else crossing(hi, hi + 1)
    return float(right - left)


def width_summary(grids, offset=0.5, column="train_loss"):
    """Per-grid widths at ``center + offset`` with mean, std and coefficient of variation."""
    widths = []
    for g in grids:
        center = g.values[column][g.center_index()]
        widths.append(width_at_level(g, center + offset, column))
    w = np.array(widths)
    mean = float(w.mean())
    std = float(w.std())
    return {"widths": w, "mean": mean, "std": std, "cv": std / mean if mean > 0 else float("nan")}


# ---------------------------------------------------------------------------
# contours
# ---------------------------------------------------------------------------


def _clean(values, overflow=None):
    v = np.array(values, dtype=np.float64)
    bad = ~np.isfinite(v)
    if overflow is not None:
        bad |= overflow
    v[bad] = OVERFLOW_SENTINEL
    return v, bad


def _edge_points(edges, values, level, xs, ys):
    nx, ny = values.shape
    xoff = (nx - 1) * ny
    edges = np.asarray(edges, dtype=np.int64)
    is_x = edges < xoff
    i = np.where(is_x, edges // ny, (edges - xoff) // max(ny - 1, 1))
    j = np.where(is_x, edges % ny, (edges - xoff) % max(ny - 1, 1))
    i2 = np.where(is_x, i + 1, i)
    j2 = np.where(is_x, j, j + 1)
    a, b = values[i, j], values[i2, j2]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip((level - a) / (b - a), 0.0, 1.0)
    px = xs[i] + t * (xs[i2] - xs[i])
    py = ys[j] + t * (ys[j2] - ys[j])
    return np.stack([px, py], axis=-1)


def contour_lines(values, xs, ys, level):
    """Isolines at ``level`` as a list of ``(k, 2)`` vertex arrays.

    Segments are chained through shared edges; closed loops repeat their
    first vertex at the end. Every vertex lies on a grid-cell edge.
    """
    values = np.asarray(values, dtype=np.float64)
    segs = kernels.marching_squares(values, level)
    if len(segs) == 0:
        return []
    neighbors = {}
    for k, (a, b) in enumerate(segs):
        neighbors.setdefault(int(a), []).append(k)
        neighbors.setdefault(int(b), []).append(k)
    used = np.zeros(len(segs), dtype=bool)

    def walk(edge, seg):
        chain = []
        while True:
            used[seg] = True
            a, b = int(segs[seg, 0]), int(segs[seg, 1])
            edge = b if a == edge else a
            chain.append(edge)
            nxt = [s for s in neighbors[edge] if not used[s]]
            if not nxt:
                return chain
            seg = nxt[0]

    lines = []
    # open lines start at edges touched by a single segment (the grid border)
    starts = sorted(e for e, ss in neighbors.items() if len(ss) == 1)
    for e in starts:
        seg = neighbors[e][0]
        if used[seg]:
            continue
        lines.append([e] + walk(e, seg))
    for k in range(len(segs)):
        if not used[k]:
            e = int(segs[k, 0])
            lines.append([e] + walk(e, k))
    return [_edge_points(line, values, level, xs, ys) for line in lines]


def default_levels(values, n=12, cap=10.0, log=True):
    """Levels strictly inside ``(min, min(max, cap))``, log-spaced when possible."""
    finite = values[np.isfinite(values) & (values < OVERFLOW_SENTINEL)]
    if finite.size == 0:
        return ()
    lo, hi = float(finite.min()), min(float(finite.max()), cap)
    if not hi > lo:
        return ()
    if log and lo > 0:
        lv = np.geomspace(lo, hi, n + 2)[1:-1]
    elif log and hi > 0:
        # shift so the log spacing starts just above zero
        lv = lo + np.geomspace((hi - lo) * 1e-3, hi - lo, n + 1)[:-1]
    else:
        lv = np.linspace(lo, hi, n + 2)[1:-1]
    return tuple(float(v) for v in lv)


class _Canvas:
    def __init__(self, width, height, xlim, ylim, margin=48):
        self.w, self.h, self.m = width, height, margin
        self.xlim, self.ylim = xlim, ylim
        self.items = []

    def sx(self, x):
        x0, x1 = self.xlim
        return self.m + (x - x0) / (x1 - x0) * (self.w - 2 * self.m)

    def sy(self, y):
        y0, y1 = self.ylim
        return self.h - self.m - (y - y0) / (y1 - y0) * (self.h - 2 * self.m)

    def polyline(self, pts, color, width=1.0, dash=None, cls=None):
        d = " ".join(f"{self.sx(x):.3f},{self.sy(y):.3f}" for x, y in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        extra += f' class="{cls}"' if cls else ""
        self.items.append(
            f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="{width:g}"{extra}/>'
        )

    def circle(self, x, y, r, color, cls=None):
        extra = f' class="{cls}"' if cls else ""
        self.items.append(f'<circle cx="{self.sx(x):.3f}" cy="{self.sy(y):.3f}" r="{r:g}" fill="{color}"{extra}/>')

    def rect(self, x0, y0, x1, y1, color):
        a, b = self.sx(x0), self.sx(x1)
        c, d = self.sy(y1), self.sy(y0)
        self.items.append(
            f'<rect x="{a:.3f}" y="{c:.3f}" width="{b - a:.3f}" height="{d - c:.3f}" fill="{color}"/>'
        )

    def text(self, x, y, s, size=10, anchor="start", cls=None, raw=False):
        px, py = (x, y) if raw else (self.sx(x), self.sy(y))
        extra = f' class="{cls}"' if cls else ""
        self.items.append(
            f'<text x="{px:.3f}" y="{py:.3f}" font-size="{size}" text-anchor="{anchor}"'
            f' font-family="sans-serif"{extra}>{escape(s)}</text>'
        )

    def frame(self, xlabel="", ylabel="", title=""):
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        self.polyline([(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)], "#000", 1)
        for t in np.linspace(x0, x1, 5):
            self.text(self.sx(t), self.h - self.m + 14, f"{t:.3g}", 9, "middle", raw=True)
        for t in np.linspace(y0, y1, 5):
            self.text(self.m - 4, self.sy(t) + 3, f"{t:.3g}", 9, "end", raw=True)
        if xlabel:
            self.text(self.w / 2, self.h - 8, xlabel, 11, "middle", raw=True)
        if ylabel:
            self.text(12, self.h / 2, ylabel, 11, "middle", raw=True)
        if title:
            self.text(self.w / 2, 16, title, 12, "middle", raw=True)

    def svg(self):
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.w}" height="{self.h}"'
            f' viewBox="0 0 {self.w} {self.h}">\n'
            f'<rect x="0" y="0" width="{self.w}" height="{self.h}" fill="#fff"/>\n'
        )
        return head + "\n".join(self.items) + "\n</svg>\n"


def _palette(t):
    # blue -> teal -> yellow ramp
    anchors = np.array([[48, 18, 120], [33, 145, 140], [253, 231, 37]], dtype=np.float64)
    t = float(np.clip(t, 0.0, 1.0)) * (len(anchors) - 1)
    k = min(int(t), len(anchors) - 2)
    c = anchors[k] + (t - k) * (anchors[k + 1] - anchors[k])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def _scaled(grid, column, transform):
    """Column values ready for plotting plus the mask of overflow cells."""
    values, bad = _clean(grid.values[column], grid.overflow)
    if transform == "log":
        if np.any(values[~bad] <= 0):
            raise ValueError("log transform needs strictly positive values")
        out = np.full(values.shape, np.log10(OVERFLOW_SENTINEL))
        out[~bad] = np.log10(values[~bad])
        values = out
    return values, bad


def _levels(values, spec):
    if spec.levels is not None:
        return tuple(float(np.log10(v)) for v in spec.levels) if spec.transform == "log" else spec.levels
    if spec.transform == "log":
        # values are already logs, so evenly spaced levels are log-spaced
        return default_levels(values, spec.n_levels, np.log10(spec.cap), log=False)
    return default_levels(values, spec.n_levels, spec.cap)


def _contour_layer(canvas, values, levels, xs, ys, label_fn):
    drawn = 0
    for k, level in enumerate(levels):
        color = _palette(k / max(len(levels) - 1, 1))
        lines = contour_lines(values, xs, ys, level)
        for line in lines:
            canvas.polyline(line, color, 1.2, cls="contour")
            drawn += 1
        if lines:
            longest = max(lines, key=len)
            x, y = longest[len(longest) // 2]
            canvas.text(x, y, label_fn(level), 8, "middle", cls="label")
    return drawn


def contour_svg(grid, spec=None, column="train_loss", title=""):
    """Contour plot of a 2-D grid; warns and marks the SVG when nothing is drawn."""
    spec = spec or RenderSpec("contour-2d")
    if grid.ndim != 2:
        raise ValueError("contour plots need a 2-D grid")
    xs, ys = grid.coords
    values, _ = _scaled(grid, column, spec.transform)
    levels = _levels(values, spec)
    canvas = _Canvas(spec.width, spec.height, (xs[0], xs[-1]), (ys[0], ys[-1]))
    label = (lambda v: f"{10 ** v:.3g}") if spec.transform == "log" else (lambda v: f"{v:.3g}")
    drawn = _contour_layer(canvas, values, levels, xs, ys, label)
    canvas.frame("alpha", "beta", title or column)
    if drawn == 0:
        _empty_warning(canvas, levels)
    return canvas.svg()


def _empty_warning(canvas, levels):
    msg = "no contour drawn: every level lies outside the grid's value range"
    warnings.warn(msg, EmptyContourWarning, stacklevel=3)
    canvas.text(canvas.w / 2, canvas.h / 2, msg, 11, "middle", cls="warning", raw=True)
    canvas.items.append(f"<!-- empty-contour levels={','.join(f'{v:.6g}' for v in levels)} -->")


def heat_svg(grid, spec=None, column="train_loss", title=""):
    spec = spec or RenderSpec("heat-2d")
    if grid.ndim != 2:
        raise ValueError("heat maps need a 2-D grid")
    xs, ys = grid.coords
    values, bad = _scaled(grid, column, spec.transform)
    shown = values[~bad]
    lo, hi = (float(shown.min()), float(shown.max())) if shown.size else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    dx = (xs[-1] - xs[0]) / (len(xs) - 1) / 2
    dy = (ys[-1] - ys[0]) / (len(ys) - 1) / 2
    canvas = _Canvas(spec.width, spec.height, (xs[0] - dx, xs[-1] + dx), (ys[0] - dy, ys[-1] + dy))
    for i, j in np.ndindex(values.shape):
        color = "#ffffff" if bad[i, j] else _palette((values[i, j] - lo) / span)
        canvas.rect(xs[i] - dx, ys[j] - dy, xs[i] + dx, ys[j] + dy, color)
    canvas.frame("alpha", "beta", title or column)
    return canvas.svg()


def line_svg(grid, spec=None, title=""):
    """Loss (blue) and error (red) along a 1-D grid; test curves dashed."""
    spec = spec or RenderSpec("line-1d")
    if grid.ndim != 1:
        raise ValueError("line plots need a 1-D grid")
    (x,) = grid.coords
    curves = []
    for name, color, dash in (
        ("train_loss", "#1f4fd1", None),
        ("test_loss", "#1f4fd1", "4,3"),
        ("train_err", "#d12f1f", None),
        ("test_err", "#d12f1f", "4,3"),
    ):
        v, bad = _clean(grid.values[name], grid.overflow)
        if np.all(np.isnan(grid.values[name])):
            continue
        v = np.where(bad, np.nan, v)
        if spec.transform == "log":
            v = np.where(v > 0, np.log10(np.where(v > 0, v, 1.0)), np.nan)
        curves.append((name, color, dash, v))
    allv = np.concatenate([c[3][np.isfinite(c[3])] for c in curves]) if curves else np.zeros(1)
    lo, hi = float(allv.min()), float(allv.max())
    if spec.transform == "linear":
        hi = min(hi, spec.cap)
    if not hi > lo:
        hi = lo + 1.0
    canvas = _Canvas(spec.width, spec.height, (x[0], x[-1]), (lo, hi))
    for name, color, dash, v in curves:
        v = np.clip(v, lo, hi)
        ok = np.isfinite(v)
        # break the polyline at missing values
        run = []
        for xi, vi, good in zip(x, v, ok):
            if good:
                run.append((xi, vi))
            elif run:
                canvas.polyline(run, color, 1.5, dash, cls=name)
                run = []
        if run:
            canvas.polyline(run, color, 1.5, dash, cls=name)
    canvas.frame("alpha", "log10 value" if spec.transform == "log" else "value", title)
    return canvas.svg()


def trajectory_svg(grid, path, lr_drop=None, spec=None, title=""):
    """Contours of a 2-D grid with an optimizer path on top; LR drops as red dots."""
    spec = spec or RenderSpec("trajectory-overlay")
    path = np.asarray(path, dtype=np.float64)
    if grid.ndim == 1:
        (xs,) = grid.coords
        ys = np.array([-1.0, 1.0])
        canvas = _Canvas(spec.width, spec.height, (xs[0], xs[-1]), (-1.0, 1.0))
        pts = np.column_stack([path[:, 0], np.zeros(len(path))])
    else:
        xs, ys = grid.coords
        values, _ = _scaled(grid, "train_loss", spec.transform)
        levels = _levels(values, spec)
        canvas = _Canvas(spec.width, spec.height, (xs[0], xs[-1]), (ys[0], ys[-1]))
        label = (lambda v: f"{10 ** v:.3g}") if spec.transform == "log" else (lambda v: f"{v:.3g}")
        _contour_layer(canvas, values, levels, xs, ys, label)
        pts = path[:, :2]
    canvas.polyline(pts, "#000000", 1.5, cls="path")
    for k, p in enumerate(pts):
        if lr_drop is not None and lr_drop[k]:
            canvas.circle(p[0], p[1], 3.5, "#e00000", cls="lr-drop")
        else:
            canvas.circle(p[0], p[1], 1.5, "#000000")
    canvas.frame("pc1", "pc2", title)
    return canvas.svg()


def histogram_svg(counts, edges, spec=None, title="weights"):
    spec = spec or RenderSpec("histogram")
    counts = np.asarray(counts, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.float64)
    top = float(counts.max()) if counts.size and counts.max() > 0 else 1.0
    canvas = _Canvas(spec.width, spec.height, (edges[0], edges[-1]), (0.0, top))
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        if c > 0:
            canvas.rect(a, 0.0, b, c, "#4a6fb5")
    canvas.frame("weight", "count", title)
    return canvas.svg()


def norm_curve_svg(series, spec=None, title="weight norm", xlabel="epoch"):
    """One or more norm curves; ``series`` maps a label to a 1-D array."""
    spec = spec or RenderSpec("norm-curve")
    items = sorted(series.items())
    allv = np.concatenate([np.asarray(v, dtype=np.float64) for _, v in items])
    lo, hi = float(allv.min()), float(allv.max())
    if not hi > lo:
        lo, hi = lo - 0.5, hi + 0.5
    n = max(len(v) for _, v in items)
    canvas = _Canvas(spec.width, spec.height, (0.0, max(n - 1, 1)), (lo, hi))
    for k, (name, v) in enumerate(items):
        color = _palette(k / max(len(items) - 1, 1))
        canvas.polyline(list(enumerate(np.asarray(v, dtype=np.float64))), color, 1.5, cls="norm")
        canvas.text(canvas.w - canvas.m - 4, canvas.m + 14 * (k + 1), str(name), 10, "end", raw=True)
    canvas.frame(xlabel, "norm", title)
    return canvas.svg()


def render(grid, spec):
    """Dispatch a grid to the renderer named by ``spec.kind``; writes ``spec.output`` if set."""
    if spec.kind == "contour-2d":
        doc = contour_svg(grid, spec)
    elif spec.kind == "heat-2d":
        doc = heat_svg(grid, spec)
    elif spec.kind == "line-1d":
        doc = line_svg(grid, spec)
    else:
        raise ValueError(f"{spec.kind} plots are not drawn from a loss grid alone")
    if spec.output:
        with open(spec.output, "w", newline="\n") as f:
            f.write(doc)
    return doc
