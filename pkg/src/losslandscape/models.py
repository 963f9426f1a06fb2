"""Desk-scale network zoo on a flat parameter vector.

A model is a :class:`ModelSpec` (the layer chain) compiled into a
:class:`Model` that evaluates logits from a single flat parameter vector. The
:class:`Layout` records which slice of that vector belongs to which layer and
what kind of entry it is, down to individual filters, which is what the
direction normalization code needs.

Text config grammar (parsed with :mod:`configparser`)::

    [model]
    input_shape = 1, 8, 8       ; comma separated, channels first
    classes = 10

    [layer 1]
    kind = conv                 ; conv | linear | relu | batchnorm | skip | flatten | maxpool
    out = 4                     ; conv out-channels / linear out-dim
    kernel = 3                  ; conv only
    stride = 1                  ; conv only
    padding = 1                 ; conv only, default kernel // 2
    bias = true                 ; conv / linear

    [layer 2]
    kind = skip

    [layer 2.1]                 ; dotted numbers nest inside a skip block
    kind = conv
    out = 4

Sections are ordered numerically by their dotted index.
"""
import configparser
import functools
import hashlib
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, as_tensor, cross_entropy, no_grad, relu, segment, take

__all__ = [
    "LayerSpec",
    "ModelSpec",
    "Region",
    "Layout",
    "ParamVector",
    "Model",
    "ModelError",
    "build",
    "filters_of",
    "rescale_pair",
    "mlp_spec",
    "convnet_spec",
    "skipnet_spec",
    "KINDS",
]

KINDS = ("weight", "bias", "bn-scale", "bn-shift", "bn-running-stat")
LAYER_KINDS = ("conv", "linear", "relu", "batchnorm", "skip", "flatten", "maxpool")
HOMOGENEOUS = ("relu", "flatten", "maxpool")

BN_MOMENTUM = 0.1
BN_EPS = 1e-5


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    out: int = 0
    kernel: int = 3
    stride: int = 1
    padding: int | None = None
    bias: bool = True
    inner: tuple = ()

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ModelError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("conv", "linear") and self.out < 1:
            raise ModelError(f"{self.kind} layer needs out >= 1")
        if self.kind == "skip" and not self.inner:
            raise ModelError("skip block needs at least one inner layer")
        if self.kind != "skip" and self.inner:
            raise ModelError(f"{self.kind} layer cannot have inner layers")
        if self.kind == "conv" and self.padding is None:
            object.__setattr__(self, "padding", self.kernel // 2)

    @property
    def pad(self):
        return self.kernel // 2 if self.padding is None else self.padding


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple
    input_shape: tuple
    classes: int

    def to_text(self):
        lines = [
            "[model]",
            "input_shape = " + ", ".join(str(d) for d in self.input_shape),
            f"classes = {self.classes}",
        ]

        def emit(layers, prefix):
            for k, layer in enumerate(layers, start=1):
                name = f"{prefix}{k}"
                lines.extend(["", f"[layer {name}]", f"kind = {layer.kind}"])
                if layer.kind in ("conv", "linear"):
                    lines.append(f"out = {layer.out}")
                if layer.kind == "conv":
                    lines.append(f"kernel = {layer.kernel}")
                    lines.append(f"stride = {layer.stride}")
                    lines.append(f"padding = {layer.pad}")
                if layer.kind in ("conv", "linear"):
                    lines.append(f"bias = {'true' if layer.bias else 'false'}")
                if layer.kind == "skip":
                    emit(layer.inner, name + ".")

        emit(self.layers, "")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ModelError(f"malformed model config: {exc}") from None
        if not parser.has_section("model"):
            raise ModelError("model config needs a [model] section")
        m = parser["model"]
        try:
            input_shape = tuple(int(v) for v in m["input_shape"].split(","))
            classes = int(m["classes"])
        except (KeyError, ValueError) as exc:
            raise ModelError(f"bad [model] section: {exc}") from None

        entries = []
        for name in parser.sections():
            if name == "model":
                continue
            head, _, index = name.partition(" ")
            if head != "layer" or not index:
                raise ModelError(f"unexpected section [{name}]")
            try:
                key = tuple(int(p) for p in index.split("."))
            except ValueError:
                raise ModelError(f"bad layer index in [{name}]") from None
            entries.append((key, parser[name]))
        entries.sort(key=lambda e: e[0])

        def parse_layer(sec, inner):
            allowed = {"kind", "out", "kernel", "stride", "padding", "bias"}
            unknown = set(sec.keys()) - allowed
            if unknown:
                raise ModelError(f"unknown keys {sorted(unknown)} in [{sec.name}]")
            kw = {"kind": sec.get("kind", "").strip(), "inner": inner}
            for k in ("out", "kernel", "stride", "padding"):
                if k in sec:
                    kw[k] = sec.getint(k)
            if "bias" in sec:
                kw["bias"] = sec.getboolean("bias")
            return LayerSpec(**kw)

        def assemble(prefix):
            depth = len(prefix) + 1
            out = []
            for key, sec in entries:
                if len(key) == depth and key[:-1] == prefix:
                    out.append(parse_layer(sec, tuple(assemble(key))))
            return out

        return cls(tuple(assemble(())), input_shape, classes)

    @property
    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()


# ---------------------------------------------------------------------------
# layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    name: str
    kind: str
    start: int
    stop: int
    shape: tuple
    layer: int  # index among parametric layers
    weight_layer: int = -1  # index among conv/linear layers, weights only

    @property
    def size(self):
        return self.stop - self.start

    @property
    def n_filters(self):
        return self.shape[0] if self.kind == "weight" else 0


@dataclass(frozen=True)
class Layout:
    """Partition of the flat parameter vector into typed regions."""

    regions: tuple
    spec_hash: str = ""
    chain: tuple = ()  # flat layer walk, e.g. ("w0", "relu", "w1"); "[" / "]" bound skip blocks

    @property
    def size(self):
        return self.regions[-1].stop if self.regions else 0

    @property
    def weight_regions(self):
        return tuple(r for r in self.regions if r.kind == "weight")

    @functools.cached_property
    def kind_codes(self):
        codes = np.empty(self.size, dtype=np.int8)
        for r in self.regions:
            codes[r.start : r.stop] = KINDS.index(r.kind)
        return codes

    def mask(self, *kinds):
        """Boolean mask over entries whose kind is in ``kinds``."""
        for k in kinds:
            if k not in KINDS:
                raise ValueError(f"unknown parameter kind {k!r}")
        return np.isin(self.kind_codes, [KINDS.index(k) for k in kinds])

    @functools.cached_property
    def weight_mask(self):
        return self.mask("weight")

    def filters(self, layer):
        """``(starts, stops)`` of each filter of weight layer ``layer``."""
        weights = self.weight_regions
        if not 0 <= layer < len(weights):
            raise IndexError(f"weight layer {layer} out of range (model has {len(weights)})")
        r = weights[layer]
        n = r.shape[0]
        per = r.size // n
        starts = r.start + per * np.arange(n, dtype=np.int64)
        return starts, starts + per

    def groups(self, granularity, kinds):
        """Contiguous normalization groups over regions of the given kinds.

        Weight regions split per filter under ``"filter"``; every other
        region (and every region under ``"layer"``) forms one group.
        """
        starts, stops = [], []
        for r in self.regions:
            if r.kind not in kinds:
                continue
            if granularity == "filter" and r.kind == "weight":
                s, e = self.filters(r.weight_layer)
                starts.append(s)
                stops.append(e)
            else:
                starts.append(np.array([r.start], dtype=np.int64))
                stops.append(np.array([r.stop], dtype=np.int64))
        if not starts:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return np.concatenate(starts), np.concatenate(stops)

    def to_table(self):
        return {
            "regions": [
                [r.name, r.kind, r.start, r.stop, list(r.shape), r.layer, r.weight_layer]
                for r in self.regions
            ],
            "spec_hash": self.spec_hash,
            "chain": list(self.chain),
        }

    @classmethod
    def from_table(cls, table):
        regions = tuple(
            Region(name, kind, int(a), int(b), tuple(shape), int(layer), int(wl))
            for name, kind, a, b, shape, layer, wl in table["regions"]
        )
        return cls(regions, table.get("spec_hash", ""), tuple(table.get("chain", ())))


@dataclass
class ParamVector:
    data: np.ndarray
    layout: Layout

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (self.layout.size,):
            raise ValueError(
                f"parameter array has shape {self.data.shape}, layout expects ({self.layout.size},)"
            )

    def copy(self):
        return ParamVector(self.data.copy(), self.layout)

    def with_data(self, data):
        return ParamVector(data, self.layout)

    @property
    def weights(self):
        return self.data[self.layout.weight_mask]

    def weight_norm(self):
        return float(np.linalg.norm(self.weights))

    def region(self, name):
        for r in self.layout.regions:
            if r.name == name:
                return self.data[r.start : r.stop].reshape(r.shape)
        raise KeyError(name)


def filters_of(theta, layer):
    """Element ranges ``[(start, stop), ...]`` of each filter in weight layer ``layer``."""
    layout = theta.layout if isinstance(theta, ParamVector) else theta
    starts, stops = layout.filters(layer)
    return [(int(a), int(b)) for a, b in zip(starts, stops)]


# ---------------------------------------------------------------------------
# compiled layers
# ---------------------------------------------------------------------------


class _Ctx:
    __slots__ = ("theta", "raw", "train", "updates")

    def __init__(self, theta, train):
        self.theta = theta
        self.raw = theta.data
        self.train = train
        self.updates = {}

    def view(self, region):
        return segment(self.theta, region.start, region.stop).reshape(region.shape)

    def const(self, region):
        return Tensor(self.raw[region.start : region.stop].reshape(region.shape))


class _Linear:
    def __init__(self, w, b):
        self.w, self.b = w, b

    def __call__(self, ctx, x):
        if x.ndim > 2:
            x = x.reshape(x.shape[0], -1)
        y = x @ ctx.view(self.w).T
        if self.b is not None:
            y = y + ctx.view(self.b)
        return y


@functools.lru_cache(maxsize=64)
def _im2col_index(n, c, h, w, k, stride, pad):
    oh = (h + 2 * pad - k) // stride + 1
    ow = (w + 2 * pad - k) // stride + 1
    ci, ki, kj = np.meshgrid(np.arange(c), np.arange(k), np.arange(k), indexing="ij")
    ni, oi, oj = np.meshgrid(np.arange(n), np.arange(oh), np.arange(ow), indexing="ij")
    rows_c, rows_i, rows_j = ci.reshape(-1, 1), ki.reshape(-1, 1), kj.reshape(-1, 1)
    cn, co_i, co_j = ni.reshape(1, -1), oi.reshape(1, -1), oj.reshape(1, -1)
    r = co_i * stride + rows_i - pad
    s = co_j * stride + rows_j - pad
    valid = (r >= 0) & (r < h) & (s >= 0) & (s < w)
    idx = ((cn * c + rows_c) * h + r) * w + s
    idx = np.where(valid, idx, -1).astype(np.int64)
    idx.setflags(write=False)
    return idx, oh, ow


class _Conv:
    def __init__(self, w, b, k, stride, pad):
        self.w, self.b, self.k, self.stride, self.pad = w, b, k, stride, pad

    def __call__(self, ctx, x):
        n, c, h, w = x.shape
        idx, oh, ow = _im2col_index(n, c, h, w, self.k, self.stride, self.pad)
        cols = take(x, idx)
        out_c = self.w.shape[0]
        y = ctx.view(self.w).reshape(out_c, -1) @ cols
        if self.b is not None:
            y = y + ctx.view(self.b).reshape(out_c, 1)
        return y.reshape(out_c, n, oh, ow).transpose(1, 0, 2, 3)


class _ReLU:
    def __call__(self, ctx, x):
        return relu(x)


class _Flatten:
    def __call__(self, ctx, x):
        return x.reshape(x.shape[0], -1)


@functools.lru_cache(maxsize=32)
def _pool_index(n, c, h, w):
    oh, ow = h // 2, w // 2
    ni, ci, oi, oj = np.meshgrid(
        np.arange(n), np.arange(c), np.arange(oh), np.arange(ow), indexing="ij"
    )
    base = ((ni * c + ci) * h + 2 * oi) * w + 2 * oj
    base = base.reshape(1, -1)
    idx = np.concatenate([base, base + 1, base + w, base + w + 1]).astype(np.int64)
    idx.setflags(write=False)
    return idx, oh, ow


class _MaxPool:
    def __call__(self, ctx, x):
        n, c, h, w = x.shape
        idx, oh, ow = _pool_index(n, c, h, w)
        vals = take(x, idx)
        pick = np.zeros(vals.shape)
        pick[np.argmax(vals.data, axis=0), np.arange(vals.shape[1])] = 1.0
        return (vals * Tensor(pick)).sum(axis=0).reshape(n, c, oh, ow)


class _BatchNorm:
    def __init__(self, scale, shift, mean, var):
        self.scale, self.shift, self.mean, self.var = scale, shift, mean, var

    def __call__(self, ctx, x):
        c = self.scale.shape[0]
        bshape = (1, c) + (1,) * (x.ndim - 2)
        axes = (0,) + tuple(range(2, x.ndim))
        if ctx.train:
            mu = x.mean(axis=axes, keepdims=True)
            centered = x - mu
            var = (centered * centered).mean(axis=axes, keepdims=True)
            m = x.size // c
            # running buffers track the unbiased variance
            unbiased = var.data.reshape(c) * (m / max(m - 1, 1))
            rm = ctx.raw[self.mean.start : self.mean.stop]
            rv = ctx.raw[self.var.start : self.var.stop]
            ctx.updates[self.mean.start] = (1 - BN_MOMENTUM) * rm + BN_MOMENTUM * mu.data.reshape(c)
            ctx.updates[self.var.start] = (1 - BN_MOMENTUM) * rv + BN_MOMENTUM * unbiased
        else:
            # running statistics are buffers: read as constants, never differentiated
            centered = x - ctx.const(self.mean).reshape(bshape)
            var = ctx.const(self.var).reshape(bshape)
        xhat = centered * (var + BN_EPS) ** -0.5
        return xhat * ctx.view(self.scale).reshape(bshape) + ctx.view(self.shift).reshape(bshape)


class _Skip:
    def __init__(self, inner):
        self.inner = inner

    def __call__(self, ctx, x):
        y = x
        for node in self.inner:
            y = node(ctx, y)
        return y + x


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


class _Builder:
    def __init__(self):
        self.regions = []
        self.offset = 0
        self.param_layer = 0
        self.weight_layer = 0
        self.sequence = []

    def add(self, name, kind, shape, weight_layer=-1):
        n = int(np.prod(shape))
        r = Region(name, kind, self.offset, self.offset + n, tuple(shape), self.param_layer, weight_layer)
        self.regions.append(r)
        self.offset += n
        return r

    def compile(self, layers, shape, path):
        nodes = []
        for k, spec in enumerate(layers, start=1):
            name = f"{path}{k}"
            where = f"layer {name} ({spec.kind})"
            if spec.kind == "linear":
                fan_in = int(np.prod(shape))
                wl = self.weight_layer
                w = self.add(f"{name}.weight", "weight", (spec.out, fan_in), wl)
                b = self.add(f"{name}.bias", "bias", (spec.out,)) if spec.bias else None
                self.sequence.append(f"w{wl}")
                self.weight_layer += 1
                self.param_layer += 1
                nodes.append(_Linear(w, b))
                shape = (spec.out,)
            elif spec.kind == "conv":
                if len(shape) != 3:
                    raise ModelError(f"{where} needs a (C, H, W) input, previous layer gives {shape}")
                c, h, wd = shape
                oh = (h + 2 * spec.pad - spec.kernel) // spec.stride + 1
                ow = (wd + 2 * spec.pad - spec.kernel) // spec.stride + 1
                if oh < 1 or ow < 1:
                    raise ModelError(f"{where}: kernel {spec.kernel} does not fit input {shape}")
                wl = self.weight_layer
                w = self.add(f"{name}.weight", "weight", (spec.out, c, spec.kernel, spec.kernel), wl)
                b = self.add(f"{name}.bias", "bias", (spec.out,)) if spec.bias else None
                self.sequence.append(f"w{wl}")
                self.weight_layer += 1
                self.param_layer += 1
                nodes.append(_Conv(w, b, spec.kernel, spec.stride, spec.pad))
                shape = (spec.out, oh, ow)
            elif spec.kind == "batchnorm":
                c = shape[0]
                regs = [
                    self.add(f"{name}.scale", "bn-scale", (c,)),
                    self.add(f"{name}.shift", "bn-shift", (c,)),
                    self.add(f"{name}.running_mean", "bn-running-stat", (c,)),
                    self.add(f"{name}.running_var", "bn-running-stat", (c,)),
                ]
                self.param_layer += 1
                self.sequence.append("batchnorm")
                nodes.append(_BatchNorm(*regs))
            elif spec.kind == "relu":
                self.sequence.append("relu")
                nodes.append(_ReLU())
            elif spec.kind == "flatten":
                self.sequence.append("flatten")
                nodes.append(_Flatten())
                shape = (int(np.prod(shape)),)
            elif spec.kind == "maxpool":
                if len(shape) != 3 or shape[1] < 2 or shape[2] < 2:
                    raise ModelError(f"{where} needs a (C, H, W) input with H, W >= 2, got {shape}")
                self.sequence.append("maxpool")
                nodes.append(_MaxPool())
                shape = (shape[0], shape[1] // 2, shape[2] // 2)
            elif spec.kind == "skip":
                self.sequence.append("[")
                inner, inner_shape = self.compile(spec.inner, shape, name + ".")
                self.sequence.append("]")
                if inner_shape != shape:
                    raise ModelError(
                        f"{where}: inner layers map {shape} to {inner_shape}; identity shortcut needs equal shapes"
                    )
                nodes.append(_Skip(inner))
        return nodes, shape


class Model:
    """Compiled, immutable model graph evaluated on a flat parameter vector."""

    def __init__(self, spec):
        self.spec = spec
        b = _Builder()
        self.nodes, out_shape = b.compile(spec.layers, tuple(spec.input_shape), "")
        if out_shape != (spec.classes,):
            raise ModelError(
                f"last layer produces shape {out_shape}, expected ({spec.classes},) logits"
            )
        self.layout = Layout(tuple(b.regions), spec.digest, tuple(b.sequence))

    @property
    def spec_hash(self):
        return self.layout.spec_hash

    @property
    def size(self):
        return self.layout.size

    def forward(self, theta, x, train=False, updates=None):
        """Logits for input batch ``x``.

        ``theta`` is a :class:`ParamVector`, a flat array, or a 1-D
        :class:`Tensor` (to differentiate through). With ``train=True`` batch
        norm uses batch statistics and, if ``updates`` is a dict, the new
        running buffers are stored in it keyed by region start.
        """
        if isinstance(theta, ParamVector):
            theta = theta.data
        theta = as_tensor(theta)
        if theta.shape != (self.size,):
            raise ValueError(f"parameter vector has shape {theta.shape}, model expects ({self.size},)")
        x = as_tensor(x)
        expected = tuple(self.spec.input_shape)
        if x.shape[1:] != expected:
            raise ValueError(
                f"input batch has per-sample shape {x.shape[1:]}, model expects {expected} "
                f"(full input shape {x.shape})"
            )
        ctx = _Ctx(theta, train)
        y = x
        for node in self.nodes:
            y = node(ctx, y)
        if updates is not None:
            updates.update(ctx.updates)
        return y

    def loss(self, theta, x, labels, train=False, updates=None):
        return cross_entropy(self.forward(theta, x, train, updates), labels)

    def evaluate(self, theta, x, labels, chunk=4096):
        """Mean cross-entropy and error rate in inference mode."""
        if isinstance(theta, ParamVector):
            theta = theta.data
        labels = np.asarray(labels)
        n = labels.shape[0]
        total, wrong = 0.0, 0
        with no_grad():
            for s in range(0, n, chunk):
                logits = self.forward(theta, x[s : s + chunk])
                total += cross_entropy(logits, labels[s : s + chunk], reduction="sum").item()
                wrong += int(np.count_nonzero(np.argmax(logits.data, axis=1) != labels[s : s + chunk]))
        return total / n, wrong / n

    def init(self, seed):
        """Glorot-uniform weights; zero biases and shifts; unit scales and variances."""
        rng = np.random.default_rng(seed)
        data = np.zeros(self.size)
        for r in self.layout.regions:
            if r.kind == "weight":
                receptive = int(np.prod(r.shape[2:])) if len(r.shape) > 2 else 1
                fan_in = int(np.prod(r.shape[1:]))
                fan_out = r.shape[0] * receptive
                a = np.sqrt(6.0 / (fan_in + fan_out))
                data[r.start : r.stop] = rng.uniform(-a, a, r.size)
            elif r.kind == "bn-scale" or r.name.endswith("running_var"):
                data[r.start : r.stop] = 1.0
        return ParamVector(data, self.layout)


def build(spec, seed=0):
    """Compile ``spec`` and draw initial parameters. Returns ``(model, params)``."""
    model = Model(spec)
    return model, model.init(seed)


def rescale_pair(theta, layer, factor):
    """Multiply weight layer ``layer`` by ``factor`` and layer ``layer + 1`` by ``1 / factor``.

    The two layers must be adjacent weight layers separated only by
    positively homogeneous layers (ReLU, flatten, max-pool). Biases are left
    alone, so the network function is preserved exactly only for bias-free
    networks.
    """
    if factor <= 0:
        raise ValueError(f"rescale factor must be positive, got {factor}")
    layout = theta.layout
    weights = layout.weight_regions
    if not 0 <= layer < len(weights) - 1:
        raise IndexError(f"need weight layers {layer} and {layer + 1}; model has {len(weights)}")
    if layout.chain:
        seq = layout.chain
        i, j = seq.index(f"w{layer}"), seq.index(f"w{layer + 1}")
        blocking = [kind for kind in seq[i + 1 : j] if kind not in HOMOGENEOUS]
        if blocking:
            raise ModelError(
                f"weight layers {layer} and {layer + 1} are separated by non-homogeneous {blocking[0]!r}"
            )
    out = theta.data.copy()
    a, b = weights[layer], weights[layer + 1]
    out[a.start : a.stop] *= factor
    out[b.start : b.stop] *= 1.0 / factor
    return ParamVector(out, layout)


# ---------------------------------------------------------------------------
# factories
# ---------------------------------------------------------------------------


def mlp_spec(input_dim=2, classes=2, depth=3, width=32, bias=True, batchnorm=False):
    """MLP-D: ``depth`` hidden layers of ``width`` units, ReLU, linear head."""
    layers = []
    for _ in range(depth):
        layers.append(LayerSpec("linear", out=width, bias=bias))
        if batchnorm:
            layers.append(LayerSpec("batchnorm"))
        layers.append(LayerSpec("relu"))
    layers.append(LayerSpec("linear", out=classes, bias=bias))
    return ModelSpec(tuple(layers), (input_dim,), classes)


def _conv_block(channels):
    return (LayerSpec("conv", out=channels, kernel=3), LayerSpec("batchnorm"), LayerSpec("relu"))


def convnet_spec(input_shape=(1, 8, 8), classes=10, depth=2, channels=4, pool=True):
    """ConvNet-D: ``depth`` conv/BN/ReLU blocks, optional 2x max-pool, linear head."""
    layers = []
    for _ in range(depth):
        layers.extend(_conv_block(channels))
    if pool:
        layers.append(LayerSpec("maxpool"))
    layers.append(LayerSpec("flatten"))
    layers.append(LayerSpec("linear", out=classes))
    return ModelSpec(tuple(layers), tuple(input_shape), classes)


def skipnet_spec(input_shape=(1, 8, 8), classes=10, depth=4, channels=4, pool=True):
    """SkipNet-D: a stem block, then identity shortcuts around every 2 blocks."""
    layers = list(_conv_block(channels))
    remaining = depth - 1
    while remaining >= 2:
        inner = _conv_block(channels) + _conv_block(channels)
        layers.append(LayerSpec("skip", inner=inner))
        remaining -= 2
    for _ in range(remaining):
        layers.extend(_conv_block(channels))
    if pool:
        layers.append(LayerSpec("maxpool"))
    layers.append(LayerSpec("flatten"))
    layers.append(LayerSpec("linear", out=classes))
    return ModelSpec(tuple(layers), tuple(input_shape), classes)
