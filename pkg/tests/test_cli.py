import os

import numpy as np
import pytest

from losslandscape import io
from losslandscape.cli import main
from losslandscape.data import make_split
from losslandscape.models import build

SMALL = ["--data", "two-moons", "--n-train", "64", "--n-test", "64", "--depth", "1", "--width", "8"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "run"
    code = main(["train", *SMALL, "--epochs", "4", "--batch-size", "16", "--lr-drops", "2", "--out", str(out)])
    assert code == 0
    return out


def test_train_outputs(run_dir):
    names = sorted(os.listdir(run_dir))
    for n in ("model.cfg", "final.ckpt", "history.csv", "iteration_norms.csv", "epoch_0000.ckpt", "epoch_0004.ckpt"):
        assert n in names
    _, epoch, meta = io.load_params(run_dir / "final.ckpt")
    assert epoch == 4 and meta["data"]["kind"] == "two-moons"
    history = (run_dir / "history.csv").read_text().splitlines()
    assert len(history) == 1 + 5


def test_grid2d_with_direction_flags_is_repeatable(run_dir, tmp_path):
    args = [
        "grid2d", "--ckpt", str(run_dir / "final.ckpt"),
        "--x=-1:1:51", "--y=-1:1:51", "--xnorm=filter", "--ynorm=filter", "--xignore=biasbn",
    ]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    side = io.read_sidecar(str(tmp_path / "a.csv") + ".meta")
    assert "tool_version" in side and not any("time" in k for k in side)


@pytest.mark.parametrize("sub", ["ray1d", "eigmap"])
def test_single_checkpoint_commands(run_dir, tmp_path, sub):
    extra = ["--x=-1:1:5"] + (["--y=-1:1:3", "--x=-1:1:3", "--no-test"] if sub == "eigmap" else [])
    out = tmp_path / f"{sub}.csv"
    assert main([sub, "--ckpt", str(run_dir / "final.ckpt"), *extra, "--out", str(out)]) == 0
    assert out.exists() and os.path.exists(str(out) + ".meta")


def test_interp_traj_repeat_render(run_dir, tmp_path):
    ck_a, ck_b = str(run_dir / "epoch_0000.ckpt"), str(run_dir / "final.ckpt")
    assert main(["interp1d", "--ckpt", ck_a, "--ckpt-b", ck_b, "--x=-0.5:1.5:9", "--out", str(tmp_path / "i.csv")]) == 0
    g = io.read_grid_csv(tmp_path / "i.csv")
    theta, _, meta = io.load_params(ck_b)
    model, _ = build(meta["spec"], 0)
    tr, _ = make_split("two-moons", 64, 64, 0.1, 0)
    assert g.coords[0][6] == 1.0
    assert g.loss[6] == model.evaluate(theta, tr.features, tr.labels)[0]
    assert main(["traj", "--run", str(run_dir), "--steps", "5", "--out", str(tmp_path / "t")]) == 0
    assert main(["repeat", "--ckpt", ck_b, "--n-seeds", "3", "--x=-1:1:11", "--out", str(tmp_path / "r.csv")]) == 0
    assert float(io.read_sidecar(str(tmp_path / "r.csv") + ".meta")["width_cv"]) >= 0
    assert main(["render", "--kind", "line-1d", "--grid", str(tmp_path / "i.csv"), "--out", str(tmp_path / "l.svg")]) == 0
    assert main([
        "render", "--kind", "trajectory-overlay", "--grid", str(tmp_path / "t.grid.csv"),
        "--projection", str(tmp_path / "t.proj.csv"), "--out", str(tmp_path / "o.svg"),
    ]) == 0
    assert main(["render", "--kind", "histogram", "--ckpt", ck_b, "--out", str(tmp_path / "h.svg")]) == 0
    assert main(["render", "--kind", "norm-curve", "--run", str(run_dir), "--out", str(tmp_path / "n.svg")]) == 0
    for name in ("l.svg", "o.svg", "h.svg", "n.svg"):
        assert (tmp_path / name).read_text().startswith("<?xml")
    _, coords, drops, _ = io.read_projection_csv(tmp_path / "t.proj.csv")
    assert drops.sum() == 1 and np.all(coords[-1] == 0)


def test_usage_errors(run_dir, tmp_path, capsys):
    ck = str(run_dir / "final.ckpt")
    assert main(["grid2d", "--ckpt", ck, "--x=1:-1:51", "--out", str(tmp_path / "x.csv")]) != 0
    assert "usage" in capsys.readouterr().err
    assert main(["grid2d", "--ckpt", ck, "--bogus", "--out", str(tmp_path / "x.csv")]) != 0
    assert main(["ray1d", "--ckpt", str(tmp_path / "missing.ckpt"), "--out", str(tmp_path / "x.csv")]) != 0
    assert "usage" in capsys.readouterr().err
    assert main(["grid2d", "--ckpt", ck, "--xseed", "3", "--yseed", "3", "--out", str(tmp_path / "x.csv")]) != 0
    assert main(["frobnicate"]) != 0
    assert not (tmp_path / "x.csv").exists()


def test_empty_contour_warning_in_cli(run_dir, tmp_path, capsys):
    ck = str(run_dir / "final.ckpt")
    main(["grid2d", "--ckpt", ck, "--x=-0.1:0.1:3", "--y=-0.1:0.1:3", "--out", str(tmp_path / "g.csv")])
    code = main(["render", "--grid", str(tmp_path / "g.csv"), "--levels", "1000,2000", "--out", str(tmp_path / "c.svg")])
    assert code == 0
    assert "no contour" in capsys.readouterr().err
    assert "empty-contour" in (tmp_path / "c.svg").read_text()
