"""Command-line entry point.

One verb per workflow: ``full``, ``split-eval`` and ``tt`` run the candidate
battery and emit selection tables; ``fit``, ``describe``, ``sample``,
``fp-drift``, ``fp-simulate`` and ``report`` are the single-purpose tools.

Exit codes: 0 on success, 2 when some candidate models were not estimable
(reports are still written), 1 on a fatal error.
"""

import functools
import json
import sys

import click
import numpy as np

from .errors import SizemixError
from .estimation import FitConfig, fit_mle
from .fokker_planck import DriftField, ParamPath, fp_residual, simulate_sde
from .mixtures import MODEL_NAMES, model_spec
from .pipeline import (
    JSON_SCHEMA,
    _atomic_write,
    describe,
    emit_describe,
    emit_reports,
    ingest_csv,
    params_from_dict,
    params_to_dict,
    run_full_workflow,
    run_is_oos_workflow,
    run_tt_workflow,
    table_from_dict,
)
from .sampling import RngStream, sample, sample_truncated
from .truncation import TruncationWindow

_INT_KEYS = {"max_evals", "n_starts", "seed"}


def load_config(path=None, **overrides):
    """FitConfig from an optional ``key = value`` file, overridden by flags.

    Lines are ``key = value`` (or ``key: value``); ``#`` starts a comment.
    Keys mirror the FitConfig fields.
    """
    values = {}
    if path:
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                sep = "=" if "=" in line else ":"
                key, _, val = line.partition(sep)
                key, val = key.strip(), val.strip()
                if key not in FitConfig.__dataclass_fields__:
                    raise SizemixError(f"unknown config key {key!r}")
                values[key] = int(val) if key in _INT_KEYS else float(val)
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return FitConfig(**values)


def _fatal_guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SystemExit:
            raise
        except (SizemixError, OSError, ValueError, KeyError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _parse_models(models):
    if not models:
        return None
    return [m.strip() for m in models.split(",") if m.strip()]


def _battery_options(fn):
    for deco in reversed([
        click.argument("csv_path", type=click.Path(exists=True)),
        click.option("--models", default=None,
                     help="Comma-separated candidate subset (default: all 17)."),
        click.option("--column", default="0", help="CSV column index or header name."),
        click.option("--seed", type=int, default=None),
        click.option("--starts", type=int, default=None, help="Optimizer starts per model."),
        click.option("--config", "config_path", type=click.Path(exists=True), default=None),
        click.option("--out", default="reports", help="Output directory."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]),
                     default="both"),
    ]):
        fn = deco(fn)
    return fn


def _column_arg(column):
    try:
        return int(column)
    except ValueError:
        return column


def _finish_battery(table, fits, out, fmt):
    emit_reports([table], out, fmt=fmt)
    missing = [name for name, fit in fits.items() if fit is None]
    for name in missing:
        click.echo(f"not estimable: {name}", err=True)
    click.echo(f"wrote {table.sample_id} reports to {out}")
    sys.exit(2 if missing else 0)


@click.group()
def main():
    """Composite size-distribution toolkit."""


@main.command("describe")
@click.argument("csv_paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--column", default="0")
@click.option("--out", default=None, help="Write describe.csv here instead of stdout.")
@_fatal_guard
def describe_cmd(csv_paths, column, out):
    """Nine-column descriptive statistics for each input sample."""
    stats = {}
    for path in csv_paths:
        ds = ingest_csv(path, column=_column_arg(column))
        stats[ds.label] = describe(ds)
    if out:
        emit_describe(stats, out)
        click.echo(f"wrote {out}")
    else:
        for label, st in stats.items():
            click.echo(f"{label}: {st}")


@main.command("fit")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--model", required=True, type=click.Choice(MODEL_NAMES))
@click.option("--column", default="0")
@click.option("--seed", type=int, default=None)
@click.option("--starts", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", default=None, help="Write the fit as JSON here.")
@_fatal_guard
def fit_cmd(csv_path, model, column, seed, starts, config_path, out):
    """Maximum-likelihood fit of one model to one sample."""
    cfg = load_config(config_path, seed=seed, n_starts=starts)
    ds = ingest_csv(csv_path, column=_column_arg(column))
    fit = fit_mle(model_spec(model), ds.values, cfg=cfg)
    doc = {
        "schema": JSON_SCHEMA,
        "model": model,
        "n": fit.n,
        "loglik": fit.loglik,
        "converged": fit.converged,
        "starts_agreeing": fit.starts_agreeing,
        "params": params_to_dict(fit.params),
        "std_errors": dict(zip(fit.param_names, map(float, fit.std_errors))),
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        _atomic_write(out, text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@main.command("full")
@_battery_options
@_fatal_guard
def full_cmd(csv_path, models, column, seed, starts, config_path, out, fmt):
    """Fit the battery to the full sample and emit selection tables."""
    cfg = load_config(config_path, seed=seed, n_starts=starts)
    ds = ingest_csv(csv_path, column=_column_arg(column))
    table, fits = run_full_workflow(ds, _parse_models(models), cfg)
    _finish_battery(table, fits, out, fmt)


@main.command("split-eval")
@_battery_options
@_fatal_guard
def split_eval_cmd(csv_path, models, column, seed, starts, config_path, out, fmt):
    """75/25 split: fit in-sample, score the battery out-of-sample."""
    cfg = load_config(config_path, seed=seed, n_starts=starts)
    ds = ingest_csv(csv_path, column=_column_arg(column))
    table, fits = run_is_oos_workflow(ds, _parse_models(models), cfg)
    _finish_battery(table, fits, out, fmt)


@main.command("tt")
@_battery_options
@click.option("--lower-frac", type=float, default=0.10)
@click.option("--upper-frac", type=float, default=0.001)
@_fatal_guard
def tt_cmd(csv_path, models, column, seed, starts, config_path, out, fmt,
           lower_frac, upper_frac):
    """Trim both tails and fit the doubly truncated battery."""
    cfg = load_config(config_path, seed=seed, n_starts=starts)
    ds = ingest_csv(csv_path, column=_column_arg(column))
    table, fits = run_tt_workflow(ds, (lower_frac, upper_frac),
                                  _parse_models(models), cfg)
    _finish_battery(table, fits, out, fmt)


@main.command("sample")
@click.option("--model", required=True, type=click.Choice(
    MODEL_NAMES + [m + "tt" for m in MODEL_NAMES]))
@click.option("--params", "params_path", required=True, type=click.Path(exists=True),
              help="JSON parameter document.")
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--x-min", type=float, default=None, help="Window lower edge (tt models).")
@click.option("--x-max", type=float, default=None, help="Window upper edge (tt models).")
@click.option("--out", default=None, help="Write draws as one-column CSV.")
@_fatal_guard
def sample_cmd(model, params_path, n, seed, x_min, x_max, out):
    """Draw n values from a model at given parameters."""
    spec = model_spec(model)
    with open(params_path) as fh:
        params = params_from_dict(spec, json.load(fh))
    rng = RngStream(seed)
    if spec.truncated:
        if x_min is None or x_max is None:
            raise SizemixError("tt models need --x-min and --x-max")
        draws = sample_truncated(params, TruncationWindow(x_min, x_max), n, rng)
    else:
        draws = sample(params, n, rng)
    text = "x\n" + "\n".join(repr(float(v)) for v in draws) + "\n"
    if out:
        _atomic_write(out, text)
        click.echo(f"wrote {n} draws to {out}")
    else:
        sys.stdout.write(text)


def _parse_grid(spec_str):
    lo, hi, num = spec_str.split(":")
    return np.linspace(float(lo), float(hi), int(num))


@main.command("fp-drift")
@click.argument("path_json", type=click.Path(exists=True))
@click.option("--s", type=float, required=True, help="Diffusion constant.")
@click.option("--y-grid", required=True, help="lo:hi:num in log scale.")
@click.option("--t-grid", required=True, help="lo:hi:num.")
@click.option("--tag", type=click.Choice(["generic", "4LSt", "5LSttt"]), default="generic")
@click.option("--out", default=None, help="Write the drift grid as CSV.")
@_fatal_guard
def fp_drift_cmd(path_json, s, y_grid, t_grid, tag, out):
    """Evaluate the drift on a (y, t) grid and report the PDE residual."""
    with open(path_json) as fh:
        path = ParamPath.from_json(fh.read())
    field = DriftField(s=s, path=path, tag=tag)
    y = _parse_grid(y_grid)
    t = _parse_grid(t_grid)
    lines = ["t,y,b"]
    for tk in t:
        b = field.drift(y, tk)
        lines += [
            f"{float(tk)!r},{float(yi)!r},{float(bi)!r}"
            for yi, bi in zip(y, np.atleast_1d(b))
        ]
    text = "\n".join(lines) + "\n"
    if out:
        _atomic_write(out, text)
        click.echo(f"wrote {out}")
    else:
        sys.stdout.write(text)
    if y.size >= 3 and t.size >= 3:
        click.echo(f"max PDE residual: {fp_residual(field, y, t):.6e}")


@main.command("fp-simulate")
@click.argument("path_json", type=click.Path(exists=True))
@click.option("--s", type=float, required=True)
@click.option("--n", type=int, default=100_000)
@click.option("--steps", type=int, default=2000)
@click.option("--seed", type=int, default=0)
@click.option("--tag", type=click.Choice(["generic", "4LSt", "5LSttt"]), default="generic")
@click.option("--out", default=None, help="Write the endpoint ensemble as CSV.")
@_fatal_guard
def fp_simulate_cmd(path_json, s, n, steps, seed, tag, out):
    """Transport an ensemble from f(.,t0) to t1 under the drift field."""
    with open(path_json) as fh:
        path = ParamPath.from_json(fh.read())
    field = DriftField(s=s, path=path, tag=tag)
    params, window = field.mixture_at(path.t0)
    # separate streams so the initial draw and the Brownian increments are
    # independent under one seed
    init_rng = RngStream(seed, stream_id=0)
    if window is not None:
        x0 = sample_truncated(params, window, n, init_rng)
    else:
        x0 = sample(params, n, init_rng)
    y1 = simulate_sde(field, np.log(x0), path.t0, path.t1, steps,
                      RngStream(seed, stream_id=1))
    text = "y\n" + "\n".join(repr(float(v)) for v in y1) + "\n"
    if out:
        _atomic_write(out, text)
        click.echo(f"wrote {n} endpoint values to {out}")
    else:
        sys.stdout.write(text)


@main.command("report")
@click.argument("table_jsons", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", default="reports")
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]), default="both")
@_fatal_guard
def report_cmd(table_jsons, out, fmt):
    """Re-emit saved selection tables plus the summary-count matrices."""
    tables = []
    for path in table_jsons:
        with open(path) as fh:
            tables.append(table_from_dict(json.load(fh)))
    written = emit_reports(tables, out, fmt=fmt)
    click.echo(f"wrote {len(written)} files to {out}")


if __name__ == "__main__":
    main()
