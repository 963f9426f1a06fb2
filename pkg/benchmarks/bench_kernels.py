"""Time the numba kernels against their numpy twins.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20]

Both variants are called directly, so the ``LOSSLANDSCAPE_NUMBA`` flag does
not matter here. Numba compile time is excluded by a warm-up call. Without
numba installed only the numpy column is printed.
"""
import argparse
import timeit

import numpy as np

from losslandscape import kernels
from losslandscape._accel import NUMBA_AVAILABLE
from losslandscape.models import build, skipnet_spec


def _cases(rng):
    x = rng.standard_normal(1_000_000)
    idx = rng.integers(-1, x.size, size=(64, 27, 900))
    vals = rng.standard_normal(idx.shape)
    _, theta = build(skipnet_spec((3, 16, 16), 10, depth=5, channels=32), 0)
    starts, stops = theta.layout.groups("filter", ("weight",))
    g = np.linspace(-1, 1, 401)
    surface = np.sin(4 * g)[:, None] * np.cos(3 * g)[None, :] + g[:, None] ** 2
    return {
        "gather (1.5M lookups)": ("gather", (x, idx)),
        "scatter_add (1.5M adds)": ("scatter_add", (vals, idx, x.size)),
        f"segment_sq_sums ({starts.size} filters)": ("segment_sq_sums", (theta.data, starts, stops)),
        "marching_squares (401x401)": ("marching_squares", (surface, 0.3)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':38s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, (name, call_args) in _cases(rng).items():
        np_fn = getattr(kernels, f"{name}_numpy")
        t_np = min(timeit.repeat(lambda: np_fn(*call_args), number=1, repeat=args.repeat)) * 1e3
        if NUMBA_AVAILABLE:
            nb_fn = getattr(kernels, f"{name}_numba")
            a, b = nb_fn(*call_args), np_fn(*call_args)
            if not np.array_equal(a, b):
                raise SystemExit(f"{name}: backends disagree")
            t_nb = min(timeit.repeat(lambda: nb_fn(*call_args), number=1, repeat=args.repeat)) * 1e3
            print(f"{label:38s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{label:38s} {t_np:10.3f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
