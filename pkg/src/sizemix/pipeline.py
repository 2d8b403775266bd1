"""Data ingestion, descriptive statistics, and the three analysis workflows.

The workflows fit a candidate battery to a sales sample and assemble
SelectionTables: ``run_full_workflow`` on the whole sample,
``run_is_oos_workflow`` on a 75/25 identically distributed split (criteria
evaluated out-of-sample at in-sample parameter values), and
``run_tt_workflow`` on the doubly trimmed survivors with component-wise
truncated models.
"""

import csv
import json
import math
import os
import tempfile
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .distributions import (
    DPLNParams,
    GB2Params,
    LLParams,
    LNParams,
    LNSNPParams,
    LStParams,
)
from .errors import DomainError, EmptyAfterCleaning, NotEstimable
from .estimation import FitConfig, fit_mle, pack
from .gof import compute_gof
from .mixtures import MODEL_NAMES, MixtureParams, model_spec
from .selection import CRITERIA, SelectionTable, build_table, summarize_counts
from .truncation import empirical_window

__all__ = [
    "Dataset",
    "DescriptiveStats",
    "ingest_csv",
    "describe",
    "split_75_25",
    "run_full_workflow",
    "run_is_oos_workflow",
    "run_tt_workflow",
    "emit_reports",
    "params_to_dict",
    "params_from_dict",
]

JSON_SCHEMA = "composite-dist/1"
DESCRIBE_COLUMNS = [
    "n", "mean", "sd", "mean_log", "sd_log",
    "skew_log", "kurt_log", "min", "max",
]


@dataclass(frozen=True)
class Dataset:
    """A labeled positive sales sample, stored sorted ascending."""

    label: str
    values: np.ndarray
    n_dropped: int = 0

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))
        if v.size == 0:
            raise DomainError("dataset must be nonempty")
        if np.any(v <= 0):
            raise DomainError("dataset values must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size


@dataclass(frozen=True)
class DescriptiveStats:
    """The nine descriptive columns: raw mean/SD plus log-scale moments."""

    n: int
    mean: float
    sd: float
    mean_log: float
    sd_log: float
    skew_log: float
    kurt_log: float
    min: float
    max: float


def ingest_csv(path, column=0, delimiter=","):
    """Read one numeric sales column; non-numeric and non-positive rows are
    dropped with a counted warning.  ``column`` may be an index or a header
    name."""
    values = []
    dropped = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = list(reader)
    if not rows:
        raise EmptyAfterCleaning(f"{path} is empty")
    idx = column
    start = 0
    if isinstance(column, str):
        idx = rows[0].index(column)
        start = 1
    else:
        try:
            float(rows[0][idx])
        except (ValueError, IndexError):
            start = 1  # header row
    for row in rows[start:]:
        try:
            v = float(row[idx])
        except (ValueError, IndexError):
            dropped += 1
            continue
        if not (v > 0 and math.isfinite(v)):
            dropped += 1
            continue
        values.append(v)
    if not values:
        raise EmptyAfterCleaning(f"no positive numeric rows in {path}")
    if dropped:
        warnings.warn(f"dropped {dropped} non-positive/non-numeric rows", UserWarning)
    label = os.path.splitext(os.path.basename(path))[0]
    return Dataset(label=label, values=np.asarray(values), n_dropped=dropped)


def describe(ds):
    """Raw-scale mean/SD plus log-scale moments with population skewness
    m3/m2^1.5 and non-excess kurtosis m4/m2^2 (normal gives 3)."""
    if ds.n < 4:
        raise DomainError("describe needs n >= 4")
    x = ds.values
    y = np.log(x)
    m = y - y.mean()
    m2 = float(np.mean(m**2))
    # rounding residue from averaging identical values is ~1e-32, so use a
    # relative floor rather than an exact-zero check
    if m2 <= 1e-24 * max(1.0, float(np.mean(y)) ** 2):
        raise DomainError("degenerate sample: zero log-scale variance")
    return DescriptiveStats(
        n=ds.n,
        mean=float(np.mean(x)),
        sd=float(np.std(x, ddof=1)),
        mean_log=float(np.mean(y)),
        sd_log=float(np.std(y, ddof=1)),
        skew_log=float(np.mean(m**3) / m2**1.5),
        kurt_log=float(np.mean(m**4) / m2**2),
        min=float(x[0]),
        max=float(x[-1]),
    )


def split_75_25(ds, seed):
    """Uniform random partition into ceil(0.75 n) in-sample and the rest."""
    if ds.n < 8:
        raise DomainError("split needs n >= 8")
    gen = np.random.default_rng(seed)
    perm = gen.permutation(ds.n)
    n_in = math.ceil(0.75 * ds.n)
    in_v = ds.values[perm[:n_in]]
    out_v = ds.values[perm[n_in:]]
    return (
        Dataset(label=ds.label + "_is", values=in_v),
        Dataset(label=ds.label + "_oos", values=out_v),
    )


# ---------------------------------------------------------------------------
# battery fitting with warm-start ladders
# ---------------------------------------------------------------------------

_LADDER = {"LN": ["2LN", "3LN", "4LN", "5LN"],
           "LL": ["2LL", "3LL", "4LL", "5LL"],
           "LSt": ["2LSt12", "2LSt39", "3LSt", "4LSt", "5LSt"]}


def _extend_theta(prev_fit, spec):
    """Seed an ell-mixture from the (ell-1)-fit plus a tiny extra component."""
    prev = prev_fit.params
    if not isinstance(prev, MixtureParams):
        comps = (prev,)
        weights = np.array([1.0])
    else:
        comps = prev.components
        weights = prev.full_weights
    if len(comps) + 1 != spec.ell:
        return None
    last = comps[-1]
    eps = 1e-4
    new_w = np.append(weights * (1.0 - eps), eps)
    mus = [c.mu for c in comps] + [last.mu + 0.5 * last.sigma]
    sigmas = [c.sigma for c in comps] + [last.sigma]
    if spec.base_family == "LSt":
        new_comps = tuple(
            LStParams(m, s, nu) for m, s, nu in zip(mus, sigmas, spec.fixed_nus)
        )
    elif spec.base_family == "LL":
        new_comps = tuple(LLParams(m, s) for m, s in zip(mus, sigmas))
    else:
        new_comps = tuple(LNParams(m, s) for m, s in zip(mus, sigmas))
    try:
        return pack(spec, MixtureParams(new_comps, tuple(new_w[:-1])))
    except DomainError:
        return None


def _fit_battery(values, model_names, cfg, window=None, truncated=False):
    """Fit every candidate; returns {name: FittedModel-or-None}."""
    fits = {}
    by_family_ell = {}
    for name in model_names:
        spec = model_spec(name + ("tt" if truncated else ""))
        extra = []
        prev = by_family_ell.get((spec.base_family, spec.ell - 1))
        if prev is not None:
            theta = _extend_theta(prev, spec)
            if theta is not None:
                extra.append(theta)
        try:
            fit = fit_mle(spec, values, window=window, cfg=cfg, extra_starts=extra)
        except (NotEstimable, DomainError):
            fits[name] = None
            continue
        fits[name] = fit
        by_family_ell[(spec.base_family, spec.ell)] = fit
    return fits


def _normalize_models(model_list):
    names = list(model_list) if model_list else list(MODEL_NAMES)
    for n in names:
        if n not in MODEL_NAMES:
            raise DomainError(f"unknown model {n!r}")
    return names


def run_full_workflow(ds, model_list=None, cfg=None):
    """Fit the candidates to the full sample; GoF and ICs on the same data."""
    cfg = cfg or FitConfig()
    names = _normalize_models(model_list)
    fits = _fit_battery(ds.values, names, cfg)
    results = {}
    for name, fit in fits.items():
        if fit is None:
            results[name] = None
            continue
        gof = compute_gof(ds.values, fit.cdf)
        results[name] = (fit.loglik, gof)
    table = build_table(ds.label, ds.n, results)
    return table, fits


def run_is_oos_workflow(ds, model_list=None, cfg=None, seed=None):
    """Fit in-sample, evaluate GoF/logliks/ICs on the out-of-sample quarter.

    Information criteria use the out-of-sample log-likelihood with the
    model's k and the out-of-sample n.
    """
    cfg = cfg or FitConfig()
    names = _normalize_models(model_list)
    ins, oos = split_75_25(ds, cfg.seed if seed is None else seed)
    fits = _fit_battery(ins.values, names, cfg)
    results = {}
    for name, fit in fits.items():
        if fit is None:
            results[name] = None
            continue
        ll_oos = float(np.sum(fit.model.log_pdf(oos.values)))
        if not np.isfinite(ll_oos):
            results[name] = None
            continue
        gof = compute_gof(oos.values, fit.cdf)
        results[name] = (ll_oos, gof)
    table = build_table(ds.label + "_oos", oos.n, results)
    return table, fits


def run_tt_workflow(ds, fracs=(0.10, 0.001), model_list=None, cfg=None):
    """Trim the sample tails and fit the component-wise truncated models."""
    cfg = cfg or FitConfig()
    names = _normalize_models(model_list)
    window, survivors = empirical_window(ds.values, *fracs)
    fits = _fit_battery(survivors, names, cfg, window=window, truncated=True)
    results = {}
    for name, fit in fits.items():
        if fit is None:
            results[name] = None
            continue
        gof = compute_gof(survivors, fit.cdf)
        results[name] = (fit.loglik, gof)
    table = build_table(ds.label + "_tt", survivors.size, results)
    # rows keyed by the tt names for reporting
    for row in table.rows:
        row.model = row.model + "tt"
    return table, fits


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


_TABLE_COLUMNS = ["model", "k", "loglik", "aic", "bic", "hqc", "ks", "cm", "ad"]


def table_to_dict(table):
    rows = []
    for r in table.rows:
        d = {c: getattr(r, c) for c in _TABLE_COLUMNS}
        d["flags"] = {c: bool(r.flags.get(c, False)) for c in CRITERIA}
        rows.append(d)
    return {"sample_id": table.sample_id, "n": table.n, "rows": rows}


def table_from_dict(doc):
    from .selection import SelectionRow

    rows = []
    for rd in doc["rows"]:
        row = SelectionRow(model=rd["model"], k=rd["k"])
        for c in _TABLE_COLUMNS[2:]:
            setattr(row, c, rd[c])
        row.flags = dict(rd["flags"])
        rows.append(row)
    return SelectionTable(sample_id=doc["sample_id"], n=doc["n"], rows=rows)


def _table_csv(table):
    lines = [",".join(_TABLE_COLUMNS + [f"min_{c}" for c in CRITERIA])]
    totals = {c: 0 for c in CRITERIA}
    for r in table.rows:
        cells = []
        for c in _TABLE_COLUMNS:
            v = getattr(r, c)
            cells.append("" if v is None else (v if isinstance(v, str) else repr(v)))
        for c in CRITERIA:
            flag = int(bool(r.flags.get(c, False)))
            totals[c] += flag
            cells.append(str(flag))
        lines.append(",".join(str(c) for c in cells))
    lines.append(
        ",".join(["Total"] + [""] * (len(_TABLE_COLUMNS) - 1)
                 + [str(totals[c]) for c in CRITERIA])
    )
    return "\n".join(lines) + "\n"


def _counts_csv(counts):
    lines = ["model," + ",".join(CRITERIA)]
    col_sums = {c: 0 for c in CRITERIA}
    for m, row in counts.items():
        lines.append(m + "," + ",".join(str(row[c]) for c in CRITERIA))
        for c in CRITERIA:
            col_sums[c] += row[c]
    lines.append("Total," + ",".join(str(col_sums[c]) for c in CRITERIA))
    return "\n".join(lines) + "\n"


def emit_reports(tables, out_dir, fmt="both"):
    """Write per-sample tables and the summary-count matrices.

    ``fmt`` is csv, json, or both.  Writes are atomic
    (write-temp-then-rename) and JSON documents carry the versioned schema
    tag.  Returns the list of written paths.
    """
    written = []
    counts = summarize_counts(tables)
    for table in tables:
        stem = os.path.join(out_dir, f"{table.sample_id}_table")
        if fmt in ("json", "both"):
            doc = {"schema": JSON_SCHEMA, **table_to_dict(table)}
            _atomic_write(stem + ".json", json.dumps(doc, indent=2, sort_keys=True))
            written.append(stem + ".json")
        if fmt in ("csv", "both"):
            _atomic_write(stem + ".csv", _table_csv(table))
            written.append(stem + ".csv")
    stem = os.path.join(out_dir, "summary_counts")
    if fmt in ("json", "both"):
        doc = {"schema": JSON_SCHEMA, "n_tables": len(tables), "counts": counts}
        _atomic_write(stem + ".json", json.dumps(doc, indent=2, sort_keys=True))
        written.append(stem + ".json")
    if fmt in ("csv", "both"):
        _atomic_write(stem + ".csv", _counts_csv(counts))
        written.append(stem + ".csv")
    return written


def emit_describe(stats_by_label, path):
    """describe.csv with exactly the nine descriptive columns."""
    lines = ["label," + ",".join(DESCRIBE_COLUMNS)]
    for label, st in stats_by_label.items():
        d = asdict(st)
        lines.append(label + "," + ",".join(repr(d[c]) for c in DESCRIBE_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# parameter (de)serialization for the CLI
# ---------------------------------------------------------------------------

def params_to_dict(params):
    if isinstance(params, MixtureParams):
        return {
            "components": [params_to_dict(c) for c in params.components],
            "weights": list(params.weights),
        }
    d = {k: float(v) for k, v in asdict(params).items()}
    return d


_FAMILY_TYPES = {
    "LN": LNParams, "DPLN": DPLNParams, "GB2": GB2Params,
    "LNSNP": LNSNPParams, "LL": LLParams, "LSt": LStParams,
}


def params_from_dict(spec, doc):
    base = _FAMILY_TYPES[spec.base_family]
    if spec.ell == 1 and "components" not in doc:
        return base(**doc)
    comps = []
    for i, cd in enumerate(doc["components"]):
        cd = dict(cd)
        if spec.base_family == "LSt":
            cd.setdefault("nu", spec.fixed_nus[i])
        comps.append(base(**cd))
    return MixtureParams(components=tuple(comps), weights=tuple(doc["weights"]))
