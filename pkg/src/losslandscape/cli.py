"""Command-line front end.

Every command writes its primary output plus a ``<output>.meta`` sidecar of
``key = value`` lines (seeds, schemes, hashes, tool version). Outputs carry no
timestamps, so repeating a command reproduces its files byte for byte.
"""
import argparse
import glob
import os
import sys
import warnings

import numpy as np

from . import __version__, io
from .curvature import LanczosSettings, ratio_map
from .data import SYNTHETIC_KINDS, load_idx, make_split
from .directions import IGNORE_POLICIES, SCHEMES, random_direction
from .models import ModelSpec, build, convnet_spec, mlp_spec, skipnet_spec
from .objectives import ModelObjective
from .presets import STANDARD_DATA, STANDARD_MODEL
from .render import (
    PLOT_KINDS,
    RenderSpec,
    contour_svg,
    heat_svg,
    histogram_svg,
    line_svg,
    norm_curve_svg,
    trajectory_svg,
    width_summary,
)
from .surface import AxisSpec, grid_2d, interpolate_1d, ray_1d, repeat_study
from .trainer import Checkpoint, TrainConfig, TrajectoryRecord, train, weight_histogram
from .trajectory import fit_axis, pca_directions, plane_coordinates, surface_directions, trajectory_surface

__all__ = ["main", "build_parser"]


class CliError(Exception):
    pass


def _axis(text):
    try:
        return AxisSpec.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


# ---------------------------------------------------------------------------
# shared argument groups
# ---------------------------------------------------------------------------


def _add_data_args(p):
    g = p.add_argument_group("data (defaults to the source recorded in the checkpoint)")
    g.add_argument("--data", choices=SYNTHETIC_KINDS + ("idx",))
    g.add_argument("--n-train", type=int)
    g.add_argument("--n-test", type=int)
    g.add_argument("--noise", type=float)
    g.add_argument("--data-seed", type=int)
    g.add_argument("--train-images")
    g.add_argument("--train-labels")
    g.add_argument("--test-images")
    g.add_argument("--test-labels")
    g.add_argument("--subsample", type=int, help="evaluate on a fixed seeded subset of each split")
    g.add_argument("--no-test", action="store_true", help="skip the test split")


def _add_direction_args(p, axis, default_axis, seed_default):
    p.add_argument(f"--{axis}", type=_axis, default=AxisSpec.parse(default_axis), metavar="MIN:MAX:STEPS")
    p.add_argument(f"--{axis}norm", choices=SCHEMES, default="filter")
    p.add_argument(f"--{axis}ignore", choices=IGNORE_POLICIES, default="biasbn")
    p.add_argument(f"--{axis}seed", type=int, default=seed_default)


def _add_eval_args(p):
    p.add_argument("--dir-type", choices=("weights", "states"), default="weights")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output CSV path")


def build_parser():
    parser = argparse.ArgumentParser(prog="losslandscape", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("train", help="train a model and store one checkpoint per epoch")
    _add_data_args(p)
    p.add_argument("--model", choices=("mlp", "convnet", "skipnet"), default="mlp")
    p.add_argument("--spec", help="model config file (overrides --model)")
    p.add_argument("--depth", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--no-bias", action="store_true")
    p.add_argument("--batchnorm", action="store_true")
    p.add_argument("--init-seed", type=int, default=0)
    p.add_argument("--optimizer", choices=("sgd-nesterov", "adam"), default="sgd-nesterov")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr-drops", type=_ints, default=())
    p.add_argument("--lr-factor", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="run directory")

    p = sub.add_parser("ray1d", help="loss along one normalized random direction")
    p.add_argument("--ckpt", required=True)
    _add_direction_args(p, "x", "-1:1:401", 1)
    _add_eval_args(p)
    _add_data_args(p)

    p = sub.add_parser("interp1d", help="loss along the segment between two checkpoints")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--ckpt-b", required=True)
    p.add_argument("--x", type=_axis, default=AxisSpec.parse("-0.5:1.5:401"), metavar="MIN:MAX:STEPS")
    _add_eval_args(p)
    _add_data_args(p)

    p = sub.add_parser("grid2d", help="loss over a plane of two normalized random directions")
    p.add_argument("--ckpt", required=True)
    _add_direction_args(p, "x", "-1:1:51", 1)
    _add_direction_args(p, "y", "-1:1:51", None)
    _add_eval_args(p)
    _add_data_args(p)

    p = sub.add_parser("eigmap", help="Hessian eigenvalue ratio map over a random plane")
    p.add_argument("--ckpt", required=True)
    _add_direction_args(p, "x", "-1:1:11", 1)
    _add_direction_args(p, "y", "-1:1:11", None)
    p.add_argument("--lanczos-k", type=int)
    p.add_argument("--lanczos-tol", type=float, default=1e-6)
    p.add_argument("--lanczos-seed", type=int, default=0)
    _add_eval_args(p)
    _add_data_args(p)

    p = sub.add_parser("traj", help="PCA projection of a training run and the surface under it")
    p.add_argument("--run", required=True, help="run directory written by train")
    p.add_argument("--x", type=_axis, metavar="MIN:MAX:STEPS", help="default: fitted to the path")
    p.add_argument("--y", type=_axis, metavar="MIN:MAX:STEPS", help="default: fitted to the path")
    p.add_argument("--steps", type=int, default=51, help="grid steps for fitted axes")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output prefix; writes <out>.proj.csv and <out>.grid.csv")
    _add_data_args(p)

    p = sub.add_parser("render", help="draw a grid, projection, histogram or norm curve as SVG")
    p.add_argument("--kind", choices=PLOT_KINDS, default="contour-2d")
    p.add_argument("--grid", help="grid CSV (line-1d, contour-2d, heat-2d, trajectory-overlay)")
    p.add_argument("--projection", help="projection CSV (trajectory-overlay)")
    p.add_argument("--ckpt", help="checkpoint (histogram)")
    p.add_argument("--run", action="append", help="run directory (norm-curve); repeatable")
    p.add_argument("--column", default="train_loss")
    p.add_argument("--levels", type=_floats)
    p.add_argument("--n-levels", type=int, default=12)
    p.add_argument("--transform", choices=("linear", "log"), default="linear")
    p.add_argument("--cap", type=float, default=10.0)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out", required=True, help="output SVG path")

    p = sub.add_parser("repeat", help="one surface per seed around the same checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--seeds", type=_ints, help="explicit seeds (default 1..n)")
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument("--x", type=_axis, default=AxisSpec.parse("-1:1:401"), metavar="MIN:MAX:STEPS")
    p.add_argument("--y", type=_axis, metavar="MIN:MAX:STEPS", help="give to make 2-D surfaces")
    p.add_argument("--norm", choices=SCHEMES, default="filter")
    p.add_argument("--ignore", choices=IGNORE_POLICIES, default="biasbn")
    p.add_argument("--level-offset", type=float, default=0.5, help="width level above the center loss")
    _add_eval_args(p)
    _add_data_args(p)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _load_ckpt(path):
    if not os.path.isfile(path):
        raise CliError(f"checkpoint {path!r} does not exist")
    try:
        return io.load_params(path)
    except (ValueError, KeyError) as e:
        raise CliError(f"cannot read checkpoint {path!r}: {e}") from None


def _datasets(args, meta):
    """Train and test sets from the flags, falling back to the checkpoint's record."""
    src = dict(meta.get("data", {}))
    kind = args.data or src.get("kind")
    if kind is None:
        raise CliError("no dataset given and the checkpoint does not record one (use --data)")
    if kind == "idx":
        paths = {k: getattr(args, k, None) or src.get(k) for k in ("train_images", "train_labels", "test_images", "test_labels")}
        if not paths["train_images"] or not paths["train_labels"]:
            raise CliError("--data=idx needs --train-images and --train-labels")
        for key, path in paths.items():
            if path and not os.path.isfile(path):
                raise CliError(f"{key.replace('_', '-')} file {path!r} does not exist")
        tr = load_idx(paths["train_images"], paths["train_labels"], "train")
        te = None
        if paths["test_images"] and paths["test_labels"]:
            te = load_idx(paths["test_images"], paths["test_labels"], "test", tr.classes)
        src = {"kind": "idx", **{k: v for k, v in paths.items() if v}}
    else:
        n_train = args.n_train if args.n_train is not None else src.get("n_train", STANDARD_DATA["n_train"])
        n_test = args.n_test if args.n_test is not None else src.get("n_test", STANDARD_DATA["n_test"])
        noise = args.noise if args.noise is not None else src.get("noise", STANDARD_DATA["noise"])
        seed = args.data_seed if args.data_seed is not None else src.get("seed", STANDARD_DATA["seed"])
        tr, te = make_split(kind, int(n_train), int(n_test), float(noise), int(seed))
        src = {"kind": kind, "n_train": int(n_train), "n_test": int(n_test), "noise": float(noise), "seed": int(seed)}
    if getattr(args, "no_test", False):
        te = None
    return tr, te, src


def _objectives(model, tr, te, args):
    sub = getattr(args, "subsample", None)
    train_obj = ModelObjective(model, tr, subsample=sub, seed=0)
    test_obj = ModelObjective(model, te, subsample=sub, seed=1) if te is not None else None
    return train_obj, test_obj


def _model_from_meta(meta, path):
    spec = meta.get("spec")
    if spec is None:
        raise CliError(f"checkpoint {path!r} does not store its model spec")
    model, _ = build(spec, 0)
    return model


def _sidecar(out, command, fields):
    info = {"tool": "losslandscape", "tool_version": __version__, "command": command}
    info.update({k: v for k, v in fields.items() if v is not None})
    io.write_sidecar(out + ".meta", info)


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _data_fields(src):
    return {f"data_{k}": v for k, v in sorted(src.items())}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _train_spec(args, tr):
    if args.spec:
        if not os.path.isfile(args.spec):
            raise CliError(f"model config {args.spec!r} does not exist")
        with open(args.spec) as f:
            return ModelSpec.from_text(f.read())
    shape = tuple(tr.input_shape)
    if args.model == "mlp":
        if len(shape) != 1:
            raise CliError("the mlp model takes flat inputs; use --model convnet or skipnet for images")
        depth = args.depth if args.depth is not None else STANDARD_MODEL["depth"]
        width = args.width if args.width is not None else STANDARD_MODEL["width"]
        return mlp_spec(shape[0], tr.classes, depth, width, not args.no_bias, args.batchnorm)
    if args.model == "convnet":
        return convnet_spec(shape, tr.classes, args.depth or 2, args.width or 4)
    return skipnet_spec(shape, tr.classes, args.depth or 4, args.width or 4)


def _cmd_train(args):
    if args.data is None:
        args.data = STANDARD_DATA["kind"]
    tr, te, src = _datasets(args, {})
    spec = _train_spec(args, tr)
    model, params = build(spec, args.init_seed)
    config = TrainConfig(
        args.optimizer, args.lr, args.momentum, args.weight_decay, args.batch_size,
        args.epochs, args.lr_drops, args.lr_factor, args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "model.cfg"), "w", newline="\n") as f:
        f.write(spec.to_text())
    run_meta = {"data": src, "config": config.to_dict(), "init_seed": args.init_seed}

    def save(ck):
        meta = dict(run_meta)
        meta["metrics"] = {k: getattr(ck, k) for k in ("train_loss", "train_err", "test_loss", "test_err")}
        io.save_params(os.path.join(args.out, f"epoch_{ck.epoch:04d}.ckpt"), ck.params, ck.epoch, spec, meta)

    for old in glob.glob(os.path.join(args.out, "epoch_*.ckpt")):
        os.remove(old)
    record = train(model, params, tr, config, te, on_epoch=save)
    save(record.checkpoints[0])
    io.save_params(os.path.join(args.out, "final.ckpt"), record.final, record.checkpoints[-1].epoch, spec,
                   {**run_meta, "diverged": record.diverged})
    lines = ["epoch,train_loss,train_err,test_loss,test_err,weight_norm"]
    for ck in record.checkpoints:
        vals = [ck.train_loss, ck.train_err, ck.test_loss, ck.test_err, ck.params.weight_norm()]
        lines.append(f"{ck.epoch}," + ",".join(io.format_float(v) for v in vals))
    history = os.path.join(args.out, "history.csv")
    with open(history, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    with open(os.path.join(args.out, "iteration_norms.csv"), "w", newline="\n") as f:
        f.write("iteration,weight_norm\n")
        for k, v in enumerate(record.iteration_norms, 1):
            f.write(f"{k},{io.format_float(v)}\n")
    fields = {"model_spec": spec.digest, "diverged": record.diverged, "epochs_run": record.checkpoints[-1].epoch}
    fields.update({f"train_{k}": v for k, v in config.to_dict().items()})
    fields["init_seed"] = args.init_seed
    fields.update(_data_fields(src))
    _sidecar(history, "train", fields)
    print(f"trained {record.checkpoints[-1].epoch} epochs; final train error {record.checkpoints[-1].train_err:.4f}")
    return 0 if not record.diverged else 1


def _direction(theta, args, axis, seed):
    return random_direction(theta, seed, getattr(args, f"{axis}norm"), getattr(args, f"{axis}ignore"), args.dir_type)


def _surface_fields(meta_src, grid_meta, ckpt):
    fields = dict(grid_meta)
    fields["checkpoint"] = os.path.basename(ckpt)
    fields.update(_data_fields(meta_src))
    return fields


def _cmd_ray1d(args):
    theta, _, meta = _load_ckpt(args.ckpt)
    model = _model_from_meta(meta, args.ckpt)
    tr, te, src = _datasets(args, meta)
    train_obj, test_obj = _objectives(model, tr, te, args)
    d = _direction(theta, args, "x", args.xseed)
    grid = ray_1d(theta, d, args.x, train_obj, test_obj, args.workers)
    _ensure_parent(args.out)
    io.write_grid_csv(args.out, grid)
    _sidecar(args.out, "ray1d", _surface_fields(src, grid.meta, args.ckpt))
    return 0


def _cmd_interp1d(args):
    a, _, meta = _load_ckpt(args.ckpt)
    b, _, _ = _load_ckpt(args.ckpt_b)
    model = _model_from_meta(meta, args.ckpt)
    tr, te, src = _datasets(args, meta)
    train_obj, test_obj = _objectives(model, tr, te, args)
    try:
        grid = interpolate_1d(a, b, args.x, train_obj, test_obj, args.dir_type, args.workers)
    except ValueError as e:
        raise CliError(str(e)) from None
    _ensure_parent(args.out)
    io.write_grid_csv(args.out, grid)
    fields = _surface_fields(src, grid.meta, args.ckpt)
    fields["checkpoint_b"] = os.path.basename(args.ckpt_b)
    _sidecar(args.out, "interp1d", fields)
    return 0


def _plane(args, theta):
    yseed = args.yseed if args.yseed is not None else args.xseed + 1_000_003
    if yseed == args.xseed:
        raise CliError(f"--xseed and --yseed are both {yseed}; the plane would be degenerate")
    return _direction(theta, args, "x", args.xseed), _direction(theta, args, "y", yseed)


def _cmd_grid2d(args):
    theta, _, meta = _load_ckpt(args.ckpt)
    model = _model_from_meta(meta, args.ckpt)
    tr, te, src = _datasets(args, meta)
    train_obj, test_obj = _objectives(model, tr, te, args)
    dx, dy = _plane(args, theta)
    grid = grid_2d(theta, dx, dy, (args.x, args.y), train_obj, test_obj, args.workers)
    _ensure_parent(args.out)
    io.write_grid_csv(args.out, grid)
    _sidecar(args.out, "grid2d", _surface_fields(src, grid.meta, args.ckpt))
    return 0


def _cmd_eigmap(args):
    theta, _, meta = _load_ckpt(args.ckpt)
    model = _model_from_meta(meta, args.ckpt)
    tr, _, src = _datasets(args, meta)
    train_obj = ModelObjective(model, tr, subsample=args.subsample, seed=0)
    dx, dy = _plane(args, theta)
    settings = LanczosSettings(args.lanczos_k, args.lanczos_tol, args.lanczos_seed)
    emap = ratio_map(theta, dx, dy, (args.x, args.y), train_obj, settings, workers=args.workers)
    emap.meta["split"] = tr.split
    _ensure_parent(args.out)
    io.write_ratio_csv(args.out, emap)
    _sidecar(args.out, "eigmap", _surface_fields(src, emap.meta, args.ckpt))
    return 0


def _load_run(run):
    paths = sorted(glob.glob(os.path.join(run, "epoch_*.ckpt")))
    if not paths:
        raise CliError(f"run directory {run!r} holds no epoch checkpoints")
    checkpoints, meta = [], {}
    for p in paths:
        theta, epoch, meta = _load_ckpt(p)
        m = meta.get("metrics", {})
        checkpoints.append(Checkpoint(epoch, theta, *(m.get(k, float("nan")) for k in
                                                      ("train_loss", "train_err", "test_loss", "test_err"))))
    cfg = meta.get("config")
    config = TrainConfig(**{**cfg, "lr_drops": tuple(cfg["lr_drops"])}) if cfg else None
    return TrajectoryRecord(checkpoints, config), meta


def _cmd_traj(args):
    record, meta = _load_run(args.run)
    if len(record.checkpoints) < 3:
        raise CliError("a trajectory needs at least 3 checkpoints")
    model = _model_from_meta(meta, args.run)
    tr, te, src = _datasets(args, meta)
    train_obj, test_obj = _objectives(model, tr, te, args)
    pca = pca_directions(record)
    # fitted axes cover the path in the coordinates the surface is drawn in
    plane = plane_coordinates(record, surface_directions(record, pca))
    ax = args.x or fit_axis(plane[:, 0], args.steps)
    ay = args.y or (fit_axis(plane[:, 1], args.steps) if plane.shape[1] > 1 else AxisSpec(-1.0, 1.0, args.steps))
    surf = trajectory_surface(record, pca, (ax, ay), train_obj, test_obj, args.workers)
    _ensure_parent(args.out)
    grid_path, proj_path = args.out + ".grid.csv", args.out + ".proj.csv"
    io.write_grid_csv(grid_path, surf.grid)
    proj_meta = {
        "explained_1": repr(float(pca.explained[0])),
        "explained_2": repr(float(pca.explained[1])),
        "degenerate_2": str(pca.degenerate[1]).lower(),
        "coordinates": "surface-plane",
    }
    plane = np.zeros((len(surf.epochs), 2))
    plane[:, : surf.plane_coords.shape[1]] = surf.plane_coords
    io.write_projection_csv(proj_path, surf.epochs, plane, surf.lr_drop, proj_meta)
    io.write_projection_csv(args.out + ".pca.csv", surf.epochs, surf.coords, surf.lr_drop,
                            {**proj_meta, "coordinates": "orthonormal-pca"})
    fields = dict(surf.grid.meta)
    fields.update(_data_fields(src))
    fields["run"] = os.path.basename(os.path.normpath(args.run))
    _sidecar(grid_path, "traj", fields)
    _sidecar(proj_path, "traj", proj_meta)
    print(f"PCA captured variance {pca.captured:.4f} ({pca.explained[0]:.4f} + {pca.explained[1]:.4f})")
    return 0


def _cmd_render(args):
    spec = RenderSpec(args.kind, args.levels, args.n_levels, args.transform, args.cap, args.out)
    fields = {"kind": args.kind, "transform": args.transform}
    if args.kind in ("line-1d", "contour-2d", "heat-2d", "trajectory-overlay"):
        if not args.grid:
            raise CliError(f"--kind={args.kind} needs --grid")
        if not os.path.isfile(args.grid):
            raise CliError(f"grid file {args.grid!r} does not exist")
        grid = io.read_grid_csv(args.grid)
        fields["grid"] = os.path.basename(args.grid)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.kind == "line-1d":
                doc = line_svg(grid, spec)
            elif args.kind == "contour-2d":
                doc = contour_svg(grid, spec, args.column)
            elif args.kind == "heat-2d":
                doc = heat_svg(grid, spec, args.column)
            else:
                if not args.projection or not os.path.isfile(args.projection):
                    raise CliError("--kind=trajectory-overlay needs an existing --projection file")
                _, coords, drops, _ = io.read_projection_csv(args.projection)
                doc = trajectory_svg(grid, coords, drops, spec)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
            fields["warning"] = str(w.message)
    elif args.kind == "histogram":
        if not args.ckpt:
            raise CliError("--kind=histogram needs --ckpt")
        theta, _, _ = _load_ckpt(args.ckpt)
        counts, edges = weight_histogram(theta, args.bins)
        doc = histogram_svg(counts, edges, spec)
        fields["checkpoint"] = os.path.basename(args.ckpt)
    else:
        if not args.run:
            raise CliError("--kind=norm-curve needs at least one --run")
        series = {}
        for run in args.run:
            record, _ = _load_run(run)
            series[os.path.basename(os.path.normpath(run))] = [c.params.weight_norm() for c in record.checkpoints]
        doc = norm_curve_svg(series, spec)
    _ensure_parent(args.out)
    with open(args.out, "w", newline="\n") as f:
        f.write(doc)
    _sidecar(args.out, "render", fields)
    return 0


def _cmd_repeat(args):
    theta, _, meta = _load_ckpt(args.ckpt)
    model = _model_from_meta(meta, args.ckpt)
    tr, te, src = _datasets(args, meta)
    train_obj, test_obj = _objectives(model, tr, te, args)
    axes = (args.x,) if args.y is None else (args.x, args.y)
    try:
        grids = repeat_study(theta, axes, train_obj, test_obj, args.n_seeds, list(args.seeds) if args.seeds else None,
                             args.norm, args.ignore, args.dir_type, args.workers)
    except ValueError as e:
        raise CliError(str(e)) from None
    root, ext = os.path.splitext(args.out)
    _ensure_parent(args.out)
    lines = ["seed,width"]
    summary = None
    if len(axes) == 1:
        summary = width_summary(grids, args.level_offset)
        for g, w in zip(grids, summary["widths"]):
            lines.append(f"{g.meta['repeat_seed']},{io.format_float(w)}")
    for g in grids:
        io.write_grid_csv(f"{root}.seed{g.meta['repeat_seed']}{ext or '.csv'}", g)
    with open(args.out, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    fields = {"seeds": " ".join(g.meta["repeat_seed"] for g in grids), "scheme": args.norm,
              "ignore": args.ignore, "dir_type": args.dir_type, "checkpoint": os.path.basename(args.ckpt)}
    if summary is not None:
        fields.update({"width_mean": repr(summary["mean"]), "width_std": repr(summary["std"]),
                       "width_cv": repr(summary["cv"]), "level_offset": repr(args.level_offset)})
        print(f"width mean {summary['mean']:.4f} cv {summary['cv']:.4f}")
    fields.update(_data_fields(src))
    _sidecar(args.out, "repeat", fields)
    return 0


COMMANDS = {
    "train": _cmd_train,
    "ray1d": _cmd_ray1d,
    "interp1d": _cmd_interp1d,
    "grid2d": _cmd_grid2d,
    "eigmap": _cmd_eigmap,
    "traj": _cmd_traj,
    "render": _cmd_render,
    "repeat": _cmd_repeat,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except CliError as e:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.print_usage(sys.stderr)
        print(f"losslandscape {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
