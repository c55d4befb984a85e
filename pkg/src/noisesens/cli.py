"""Command line entry point.

Exit status: 0 when every acceptance band is met (or no band applies),
2 on a band violation, 1 on any execution or usage error.
"""

from __future__ import annotations

import functools
import json
import logging
import sys

import click
from click.core import ParameterSource

from . import experiments as ex
from .harness import (
    ExperimentConfig,
    SweepGrid,
    export,
    export_rows,
    export_sweep,
    run_sweep,
    run_trials,
    _json_default,
)
from .models import ModelKind, ModelSpec

EXIT_OK, EXIT_ERROR, EXIT_BAND = 0, 1, 2

MODEL_CHOICES = [k.value for k in ModelKind]


def _load_config(ctx, params):
    """Fill parameters not given on the command line from the JSON config file."""
    path = params.pop("config", None)
    if not path:
        return params
    with open(path) as fh:
        conf = json.load(fh)
    if not isinstance(conf, dict):
        raise click.UsageError("config file must hold a JSON object")
    unknown = set(conf) - set(params)
    if unknown:
        raise click.UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, value in conf.items():
        if ctx.get_parameter_source(key) is not ParameterSource.COMMANDLINE:
            params[key] = value
    return params


def common_options(fn):
    opts = [
        click.option("--n", "n", type=int, default=1000, show_default=True, help="Matrix dimension."),
        click.option("--model", type=click.Choice(MODEL_CHOICES), default="wigner", show_default=True),
        click.option("--b", "b", type=float, default=None, help="Sparsity exponent, q = N^b (ER models)."),
        click.option("--sigma", type=float, default=1.0, show_default=True, help="Wigner diagonal std."),
        click.option("--f", "f", type=float, default=None, help="Shift for the sparse shifted model."),
        click.option("--tau", type=float, default=None, help="k = floor(N^tau)."),
        click.option("--k", "k", type=int, default=None, help="Absolute number of resampled slots."),
        click.option("--trials", type=int, default=10, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True, help="Master seed."),
        click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory."),
        click.option("--threads", type=int, default=1, show_default=True),
        click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="JSON file; explicit flags take precedence over its values."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)

    @functools.wraps(fn)
    def wrapper(**params):
        ctx = click.get_current_context()
        return fn(**_load_config(ctx, params))

    return wrapper


def build_spec(p):
    kind = ModelKind(p["model"])
    if kind is ModelKind.WIGNER:
        return ModelSpec(kind, p["n"], sigma=p["sigma"], seed=p["seed"])
    b = 0.45 if p["b"] is None else p["b"]
    return ModelSpec.er(p["n"], b, kind=kind, f=p["f"], seed=p["seed"])


def _k_args(p, default_tau=None):
    if p["k"] is not None and p["tau"] is not None:
        raise click.UsageError("give at most one of --k and --tau")
    if p["k"] is None and p["tau"] is None:
        return {"tau": default_tau} if default_tau is not None else {"k": 0}
    return {"k": p["k"]} if p["k"] is not None else {"tau": p["tau"]}


def _finish(summary, rows=None, out=None):
    if out and rows is not None:
        export_rows(rows, summary, out)
    click.echo(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    ok = summary.get("band_ok")
    return EXIT_BAND if ok is False else EXIT_OK


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Noise-sensitivity experiments for eigenvectors of random matrices."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@common_options
@click.option("--index", type=int, default=None, help="Track v_index (default: 1 Wigner, 2 ER).")
def overlap(index, **p):
    """Overlap of an eigenvector before and after resampling k entries."""
    cfg = ExperimentConfig(model=build_spec(p), trials=p["trials"], master_seed=p["seed"],
                           eigvec_index=index, threads=p["threads"], out=p["out"], **_k_args(p, 4 / 3))
    records, summary = run_trials(cfg)
    if p["out"]:
        export(records, summary, p["out"])
    return _finish(summary)


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


@cli.command()
@common_options
@click.option("--b-values", default="0.36,0.4,0.45,0.48", show_default=True)
@click.option("--tau-values", default="1.2,1.5,1.7,1.8,1.9", show_default=True)
def sweep(b_values, tau_values, **p):
    """Mean overlap over a (b, tau) grid of ER models."""
    kind = ModelKind(p["model"])
    if not kind.is_er:
        raise click.UsageError("sweep needs an ER model (--model er or er-centered)")
    grid = SweepGrid(p["n"], _floats(b_values), _floats(tau_values), p["trials"], p["seed"], kind)
    cells = run_sweep(grid, p["threads"])
    if p["out"]:
        export_sweep(cells, p["out"])
    click.echo(json.dumps(cells, indent=2, sort_keys=True, default=_json_default))
    if any(c.get("error") for c in cells):
        return EXIT_ERROR
    return EXIT_BAND if any(c.get("band_ok") is False for c in cells) else EXIT_OK


@cli.command()
@common_options
@click.option("--exponent", type=float, default=4.0, show_default=True, help="C in (log N)^C / sqrt(N).")
def deloc(exponent, **p):
    """Delocalization of all eigenvectors and the location of lambda_1."""
    rows, summary = ex.run_delocalization(build_spec(p), p["trials"], p["seed"], exponent, threads=p["threads"])
    return _finish(summary, rows, p["out"])


@cli.command()
@common_options
@click.option("--exponent", type=float, default=4.0, show_default=True, help="C in the L^C factor.")
def rigidity(exponent, **p):
    """Eigenvalue distance to the semicircle classical locations."""
    rows, summary = ex.run_rigidity(build_spec(p), p["trials"], p["seed"], exponent, threads=p["threads"])
    return _finish(summary, rows, p["out"])


@cli.command()
@common_options
@click.option("--c", "c", type=float, default=1.0, show_default=True)
@click.option("--rho", multiple=True, type=float, default=(0.1, 0.25, 0.5, 1.0), show_default=True)
def gaps(c, rho, **p):
    """Frequency of small lambda_2 - lambda_3 gaps."""
    rows, summary = ex.run_gaps(build_spec(p), p["trials"], p["seed"], c, tuple(rho), threads=p["threads"])
    return _finish(summary, rows, p["out"])


@cli.command()
@common_options
@click.option("--statistic", type=click.Choice(sorted(ex.STATISTICS)), default="linear", show_default=True)
@click.option("--m-samples", type=int, default=2000, show_default=True)
@click.option("--steps", default=None, help="Comma-separated 1-based steps (default: a spread).")
def superconc(statistic, m_samples, steps, **p):
    """I_i sequence with monotonicity and superconcentration checks."""
    step_list = None if steps is None else [int(s) for s in steps.split(",")]
    rows, summary, _ = ex.run_superconcentration(build_spec(p), statistic, m_samples, step_list, p["seed"])
    return _finish(summary, rows, p["out"])


@cli.command("resolvent-check")
@common_options
@click.option("--c1-diff", type=float, default=1.0, show_default=True,
              help="eta = N^(-2/3) L^(-C1) for the difference statistic.")
@click.option("--c1-eigvec", type=float, default=2.0, show_default=True,
              help="eta exponent for the eigenvector statistic.")
def resolvent_check(c1_diff, c1_eigvec, **p):
    """Resolvent comparison statistics at lambda_2 + i eta."""
    rows, summary = ex.run_resolvent_check(build_spec(p), p["trials"], seed=p["seed"], diff_c1=c1_diff,
                                           eigvec_c1=c1_eigvec, threads=p["threads"], **_k_args(p, 1.2))
    return _finish(summary, rows, p["out"])


@cli.command()
@common_options
@click.option("--pairs", type=int, default=200, show_default=True)
@click.option("--C", "c", type=float, default=10.0, show_default=True)
@click.option("--D", "d", type=float, default=2.0, show_default=True)
def sandwich(pairs, c, d, **p):
    """Bracketing of the lambda_2 shift under single-entry replacement."""
    spec = build_spec(p)
    if spec.q is None:
        raise click.UsageError("sandwich needs an ER-type model")
    rows, summary = ex.run_sandwich(spec, pairs, p["seed"], c, d, threads=p["threads"])
    return _finish(summary, rows, p["out"])


@cli.command("var-decomp")
@common_options
@click.option("--statistic", type=click.Choice(sorted(ex.STATISTICS)), default="lambda2", show_default=True)
@click.option("--m-samples", type=int, default=2000, show_default=True)
@click.option("--exhaustive", is_flag=True, help="Enumerate a +-1 two-point law exactly (N <= 3).")
def var_decomp(statistic, m_samples, exhaustive, **p):
    """Both sides of the variance decomposition identity."""
    if exhaustive:
        _, summary, _ = ex.run_variance_decomposition(statistic=statistic, exhaustive=True, n=p["n"])
    else:
        _, summary, _ = ex.run_variance_decomposition(build_spec(p), statistic, m_samples, p["seed"])
    return _finish(summary, None, None) if not p["out"] else _finish(summary, [], p["out"])


def main(argv=None):
    try:
        code = cli.main(args=argv, prog_name="noisesens", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001  any failure maps to status 1
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
