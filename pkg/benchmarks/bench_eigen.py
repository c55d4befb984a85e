"""Compiled vs pure-Python kernels: eigendecomposition and k-subset sampling.

    python3 benchmarks/bench_eigen.py --sizes 50,100,200 --repeat 3
"""

import json
import time

import click
import numpy as np

from noisesens._backend import get_kernels
from noisesens.resampling import floyd_draws
from noisesens.spectral import eigendecompose, eigenvalues


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _backends():
    names = ["python"]
    try:
        get_kernels("compiled")
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


@click.command()
@click.option("--sizes", default="50,100,200", show_default=True)
@click.option("--repeat", default=3, show_default=True)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
def main(sizes, repeat, json_out):
    rows = []
    rng = np.random.default_rng(0)
    for n in (int(s) for s in sizes.split(",")):
        a = rng.standard_normal((n, n))
        a = (a + a.T) / np.sqrt(2 * n)
        total = n * (n + 1) // 2
        draws = floyd_draws(rng, total, total // 4)
        row = {"n": n}
        for name in _backends():
            kern = get_kernels(name)
            row[f"{name}_eigh_s"] = _best(lambda: eigendecompose(a, backend=name), repeat)
            row[f"{name}_eigvals_s"] = _best(lambda: eigenvalues(a, backend=name), repeat)
            row[f"{name}_floyd_s"] = _best(lambda: kern.floyd_subset(total, draws), repeat)
        row["numpy_eigh_s"] = _best(lambda: np.linalg.eigh(a), repeat)
        if "compiled_eigh_s" in row:
            row["speedup_eigh"] = row["python_eigh_s"] / row["compiled_eigh_s"]
        rows.append(row)
        click.echo("  ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    if json_out:
        with open(json_out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
