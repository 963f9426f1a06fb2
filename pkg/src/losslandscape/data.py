"""Datasets: seeded synthetic 2-D classification sets and an IDX reader."""
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "make_synthetic",
    "make_split",
    "load_idx",
    "write_idx",
    "IdxError",
    "BadMagicError",
    "TruncatedFileError",
    "CountMismatchError",
    "SYNTHETIC_KINDS",
]

SYNTHETIC_KINDS = ("two-moons", "gaussian-blobs", "spirals")

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class BadMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class CountMismatchError(IdxError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: str = "train"
    classes: int = 2
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError("dataset is empty")
        if len(self.features) != len(self.labels):
            raise ValueError(
                f"{len(self.features)} feature rows but {len(self.labels)} labels"
            )
        if self.labels.min() < 0 or self.labels.max() >= self.classes:
            raise ValueError(f"labels must lie in [0, {self.classes})")
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    def __len__(self):
        return len(self.labels)

    @property
    def input_shape(self):
        return self.features.shape[1:]

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(
            self.features[idx].copy(), self.labels[idx].copy(), self.split, self.classes, dict(self.source)
        )

    def batches(self, batch_size, rng):
        """Yield index arrays of one seeded shuffled pass; the last batch may be short."""
        order = rng.permutation(len(self))
        for s in range(0, len(order), batch_size):
            yield order[s : s + batch_size]


# ---------------------------------------------------------------------------
# synthetic sets
# ---------------------------------------------------------------------------


def _class_counts(n, classes):
    base, extra = divmod(n, classes)
    return [base + (1 if c < extra else 0) for c in range(classes)]


def _sample(kind, counts, noise, rng, centers=None):
    pts = []
    if kind == "two-moons":
        for c, m in enumerate(counts):
            t = rng.uniform(0.0, np.pi, m)
            if c == 0:
                p = np.stack([np.cos(t), np.sin(t)], axis=1)
            else:
                p = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
            pts.append(p + noise * rng.standard_normal((m, 2)))
    elif kind == "gaussian-blobs":
        k = len(counts)
        if centers is None:
            if k == 2:
                centers = np.array([[-1.0, 0.0], [1.0, 0.0]])
            else:
                ang = 2 * np.pi * np.arange(k) / k
                centers = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        centers = np.asarray(centers, dtype=np.float64)
        if len(centers) != k:
            raise ValueError(f"need {k} blob centers, got {len(centers)}")
        for c, m in enumerate(counts):
            pts.append(centers[c] + noise * rng.standard_normal((m, centers.shape[1])))
    elif kind == "spirals":
        k = len(counts)
        for c, m in enumerate(counts):
            r = rng.uniform(0.1, 1.0, m)
            t = 3.0 * np.pi * r + 2 * np.pi * c / k
            p = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
            pts.append(p + noise * rng.standard_normal((m, 2)))
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")
    return pts


def _assemble(pts, rng, split, classes, source):
    x = np.concatenate(pts)
    y = np.concatenate([np.full(len(p), c, dtype=np.int64) for c, p in enumerate(pts)])
    order = rng.permutation(len(y))
    return Dataset(x[order], y[order], split, classes, source)


def make_synthetic(kind, n, noise=0.1, seed=0, classes=2, centers=None, split="train"):
    """Seeded, class-balanced synthetic set of ``n`` points in the plane."""
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    rng = np.random.default_rng(seed)
    pts = _sample(kind, _class_counts(n, classes), noise, rng, centers)
    source = {"kind": kind, "n": n, "noise": noise, "seed": seed, "classes": classes}
    return _assemble(pts, rng, split, classes, source)


def make_split(kind, n_train, n_test, noise=0.1, seed=0, classes=2):
    """Disjoint, individually balanced train and test sets from one draw."""
    if n_train < 2 or n_test < 2:
        raise ValueError("need at least 2 train and 2 test samples")
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    rng = np.random.default_rng(seed)
    tr_counts = _class_counts(n_train, classes)
    te_counts = _class_counts(n_test, classes)[::-1]
    pts = _sample(kind, [a + b for a, b in zip(tr_counts, te_counts)], noise, rng)
    tr = [p[:a] for p, a in zip(pts, tr_counts)]
    te = [p[a:] for p, a in zip(pts, tr_counts)]
    source = {"kind": kind, "n_train": n_train, "n_test": n_test, "noise": noise, "seed": seed, "classes": classes}
    return (
        _assemble(tr, rng, "train", classes, source),
        _assemble(te, rng, "test", classes, source),
    )


# ---------------------------------------------------------------------------
# IDX
# ---------------------------------------------------------------------------


def _read_header(buf, path, magic, ndim):
    if len(buf) < 4 + 4 * ndim:
        raise TruncatedFileError(f"{path}: {len(buf)} bytes is too short for an IDX header")
    (got,) = struct.unpack(">I", buf[:4])
    if got != magic:
        raise BadMagicError(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    return struct.unpack(f">{ndim}I", buf[4 : 4 + 4 * ndim])


def load_idx(images_path, labels_path, split="train", classes=None):
    """Read an IDX image/label pair; pixels are scaled to ``[0, 1]``.

    Images come back as ``(N, 1, rows, cols)``.
    """
    with open(images_path, "rb") as f:
        ibuf = f.read()
    with open(labels_path, "rb") as f:
        lbuf = f.read()
    n_img, rows, cols = _read_header(ibuf, images_path, IDX_IMAGES_MAGIC, 3)
    (n_lab,) = _read_header(lbuf, labels_path, IDX_LABELS_MAGIC, 1)
    if n_img != n_lab:
        raise CountMismatchError(f"{n_img} images but {n_lab} labels")
    need = 16 + n_img * rows * cols
    if len(ibuf) < need:
        raise TruncatedFileError(f"{images_path}: {len(ibuf)} bytes, header promises {need}")
    if len(lbuf) < 8 + n_lab:
        raise TruncatedFileError(f"{labels_path}: {len(lbuf)} bytes, header promises {8 + n_lab}")
    pixels = np.frombuffer(ibuf, dtype=np.uint8, count=n_img * rows * cols, offset=16)
    labels = np.frombuffer(lbuf, dtype=np.uint8, count=n_lab, offset=8).astype(np.int64)
    x = pixels.reshape(n_img, 1, rows, cols).astype(np.float64) / 255.0
    k = int(labels.max()) + 1 if classes is None else classes
    source = {"images": str(images_path), "labels": str(labels_path)}
    return Dataset(x, labels, split, max(k, 2), source)


def write_idx(images_path, labels_path, images, labels):
    """Write uint8 ``(N, rows, cols)`` images and labels as an IDX pair."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, len(labels)))
        f.write(labels.tobytes())
