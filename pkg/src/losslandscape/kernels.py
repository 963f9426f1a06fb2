"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

The public functions dispatch on :data:`BACKEND`; the ``*_numba`` and
``*_numpy`` variants stay importable so tests and the benchmark can compare
them directly. Both variants sum in the same sequential order, so the two
paths agree bitwise on all inputs used by the package.
"""
import numpy as np

from ._accel import BACKEND, USE_NUMBA, njit

__all__ = [
    "BACKEND",
    "gather",
    "scatter_add",
    "segment_sq_sums",
    "marching_squares",
]


# ---------------------------------------------------------------------------
# gather / scatter-add (im2col, col2im and pooling are built on these)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _gather_numba(x, idx):
    out = np.empty(idx.shape[0], dtype=np.float64)
    for k in range(idx.shape[0]):
        i = idx[k]
        out[k] = x[i] if i >= 0 else 0.0
    return out


@njit(cache=True)
def _scatter_add_numba(vals, idx, n):
    out = np.zeros(n, dtype=np.float64)
    for k in range(idx.shape[0]):
        i = idx[k]
        if i >= 0:
            out[i] += vals[k]
    return out


def gather_numba(x, idx):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    flat = np.ascontiguousarray(idx, dtype=np.int64).ravel()
    return _gather_numba(x, flat).reshape(np.shape(idx))


def gather_numpy(x, idx):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    idx = np.asarray(idx, dtype=np.int64)
    padded = np.concatenate([x, [0.0]])
    # index -1 lands on the appended zero
    return padded[np.where(idx >= 0, idx, x.size)]


def scatter_add_numba(vals, idx, n):
    vals = np.ascontiguousarray(vals, dtype=np.float64).ravel()
    flat = np.ascontiguousarray(idx, dtype=np.int64).ravel()
    return _scatter_add_numba(vals, flat, int(n))


def scatter_add_numpy(vals, idx, n):
    vals = np.asarray(vals, dtype=np.float64).ravel()
    idx = np.asarray(idx, dtype=np.int64).ravel()
    keep = idx >= 0
    return np.bincount(idx[keep], weights=vals[keep], minlength=int(n)).astype(np.float64)


def gather(x, idx):
    """``out[k] = x[idx[k]]``, with 0 wherever ``idx[k] < 0``."""
    return gather_numba(x, idx) if USE_NUMBA else gather_numpy(x, idx)


def scatter_add(vals, idx, n):
    """Adjoint of :func:`gather`: accumulate ``vals`` into a length-``n`` array."""
    return scatter_add_numba(vals, idx, n) if USE_NUMBA else scatter_add_numpy(vals, idx, n)


# ---------------------------------------------------------------------------
# per-segment sums of squares (filter norms)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _segment_sq_sums_numba(data, starts, stops):
    out = np.zeros(starts.shape[0], dtype=np.float64)
    for s in range(starts.shape[0]):
        acc = 0.0
        for k in range(starts[s], stops[s]):
            acc += data[k] * data[k]
        out[s] = acc
    return out


def segment_sq_sums_numba(data, starts, stops):
    return _segment_sq_sums_numba(
        np.ascontiguousarray(data, dtype=np.float64),
        np.ascontiguousarray(starts, dtype=np.int64),
        np.ascontiguousarray(stops, dtype=np.int64),
    )


def segment_sq_sums_numpy(data, starts, stops):
    data = np.asarray(data, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    stops = np.asarray(stops, dtype=np.int64)
    lengths = stops - starts
    seg = np.repeat(np.arange(starts.size), lengths)
    offsets = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    pos = np.repeat(starts, lengths) + offsets
    vals = data[pos]
    return np.bincount(seg, weights=vals * vals, minlength=starts.size).astype(np.float64)


def segment_sq_sums(data, starts, stops):
    """Sum of squares of ``data[starts[s]:stops[s]]`` for every segment ``s``."""
    if USE_NUMBA:
        return segment_sq_sums_numba(data, starts, stops)
    return segment_sq_sums_numpy(data, starts, stops)


# ---------------------------------------------------------------------------
# marching squares
#
# Grid point (i, j) holds values[i, j]. Edge ids:
#   x-edge (i, j)-(i+1, j): i * ny + j
#   y-edge (i, j)-(i, j+1): (nx - 1) * ny + i * (ny - 1) + j
# Cell corners c0=(i,j) c1=(i+1,j) c2=(i+1,j+1) c3=(i,j+1); cell edges
# e0=c0c1, e1=c1c2, e2=c3c2, e3=c0c3. A corner is "above" when value > level.
# Saddles (cases 5 and 10) are split by the average of the four corners.
# ---------------------------------------------------------------------------

# (edge_a, edge_b) pairs per case; -1 marks an unused slot
_CASE_TABLE = np.array(
    [
        [-1, -1, -1, -1],  # 0
        [3, 0, -1, -1],  # 1
        [0, 1, -1, -1],  # 2
        [3, 1, -1, -1],  # 3
        [1, 2, -1, -1],  # 4
        [3, 0, 1, 2],  # 5, center below: c0 and c2 isolated
        [0, 2, -1, -1],  # 6
        [2, 3, -1, -1],  # 7
        [2, 3, -1, -1],  # 8
        [0, 2, -1, -1],  # 9
        [0, 1, 2, 3],  # 10, center below: c1 and c3 isolated
        [1, 2, -1, -1],  # 11
        [3, 1, -1, -1],  # 12
        [0, 1, -1, -1],  # 13
        [3, 0, -1, -1],  # 14
        [-1, -1, -1, -1],  # 15
    ],
    dtype=np.int64,
)
# saddle resolution when the cell center is above the level
_SADDLE_CENTER_ABOVE = np.array(
    [[0, 1, 2, 3], [3, 0, 1, 2]], dtype=np.int64
)  # rows: case 5, case 10


@njit(cache=True)
def _cell_edge(k, i, j, ny, xoff):
    if k == 0:
        return i * ny + j
    if k == 1:
        return xoff + (i + 1) * (ny - 1) + j
    if k == 2:
        return i * ny + j + 1
    return xoff + i * (ny - 1) + j


@njit(cache=True)
def _marching_squares_numba(values, level, table, saddle_above):
    nx, ny = values.shape
    xoff = (nx - 1) * ny
    cap = 2 * (nx - 1) * (ny - 1)
    segs = np.empty((cap, 2), dtype=np.int64)
    m = 0
    for i in range(nx - 1):
        for j in range(ny - 1):
            v0 = values[i, j]
            v1 = values[i + 1, j]
            v2 = values[i + 1, j + 1]
            v3 = values[i, j + 1]
            case = 0
            if v0 > level:
                case |= 1
            if v1 > level:
                case |= 2
            if v2 > level:
                case |= 4
            if v3 > level:
                case |= 8
            if case == 0 or case == 15:
                continue
            row = table[case]
            if case == 5 or case == 10:
                if 0.25 * (v0 + v1 + v2 + v3) > level:
                    row = saddle_above[0 if case == 5 else 1]
            for s in range(2):
                a = row[2 * s]
                if a < 0:
                    break
                segs[m, 0] = _cell_edge(a, i, j, ny, xoff)
                segs[m, 1] = _cell_edge(row[2 * s + 1], i, j, ny, xoff)
                m += 1
    return segs[:m].copy()


def marching_squares_numba(values, level):
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _marching_squares_numba(values, float(level), _CASE_TABLE, _SADDLE_CENTER_ABOVE)


def marching_squares_numpy(values, level):
    values = np.asarray(values, dtype=np.float64)
    nx, ny = values.shape
    xoff = (nx - 1) * ny
    v0 = values[:-1, :-1]
    v1 = values[1:, :-1]
    v2 = values[1:, 1:]
    v3 = values[:-1, 1:]
    case = (
        (v0 > level).astype(np.int64)
        | ((v1 > level).astype(np.int64) << 1)
        | ((v2 > level).astype(np.int64) << 2)
        | ((v3 > level).astype(np.int64) << 3)
    )
    rows = _CASE_TABLE[case]
    center_above = 0.25 * (v0 + v1 + v2 + v3) > level
    rows = np.where(((case == 5) & center_above)[..., None], _SADDLE_CENTER_ABOVE[0], rows)
    rows = np.where(((case == 10) & center_above)[..., None], _SADDLE_CENTER_ABOVE[1], rows)

    ii, jj = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    edge_ids = np.stack(
        [
            ii * ny + jj,
            xoff + (ii + 1) * (ny - 1) + jj,
            ii * ny + jj + 1,
            xoff + ii * (ny - 1) + jj,
        ],
        axis=-1,
    ).reshape(-1, 4)
    rows = rows.reshape(-1, 4)
    out = []
    for s in range(2):
        a = rows[:, 2 * s]
        b = rows[:, 2 * s + 1]
        hit = np.nonzero(a >= 0)[0]
        cells = np.arange(rows.shape[0])[hit]
        pair = np.stack([edge_ids[hit, a[hit]], edge_ids[hit, b[hit]]], axis=1)
        out.append((cells, np.full(hit.size, s), pair))
    cells = np.concatenate([o[0] for o in out])
    slots = np.concatenate([o[1] for o in out])
    pairs = np.concatenate([o[2] for o in out]).reshape(-1, 2)
    order = np.lexsort((slots, cells))
    return np.ascontiguousarray(pairs[order], dtype=np.int64)


def marching_squares(values, level):
    """Isoline segments of a 2D grid at ``level`` as pairs of edge ids.

    Segments are ordered by cell (row-major) then by slot inside the cell.
    """
    if USE_NUMBA:
        return marching_squares_numba(values, level)
    return marching_squares_numpy(values, level)
