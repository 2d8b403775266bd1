"""Information criteria and per-sample selection tables with argmin flags."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .mixtures import MODEL_NAMES

__all__ = [
    "aic",
    "bic",
    "hqc",
    "SelectionRow",
    "SelectionTable",
    "build_table",
    "summarize_counts",
    "CRITERIA",
]

CRITERIA = ("ks", "cm", "ad", "aic", "bic", "hqc")


def aic(loglik, k):
    """2k - 2 ln L*."""
    return float(2.0 * k - 2.0 * loglik)


def bic(loglik, k, n):
    """k ln(n) - 2 ln L*."""
    return float(k * math.log(n) - 2.0 * loglik)


def hqc(loglik, k, n):
    """2k ln(ln(n)) - 2 ln L*."""
    if n < 3:
        raise DomainError("HQC needs n >= 3 so that ln(ln n) > 0")
    return float(2.0 * k * math.log(math.log(n)) - 2.0 * loglik)


@dataclass
class SelectionRow:
    """One model's line in a selection table; None values mean not estimable."""

    model: str
    k: int
    loglik: float = None
    aic: float = None
    bic: float = None
    hqc: float = None
    ks: float = None
    cm: float = None
    ad: float = None
    flags: dict = field(default_factory=dict)

    @property
    def estimable(self):
        return self.loglik is not None


@dataclass
class SelectionTable:
    """Per-sample battery results: one row per candidate model."""

    sample_id: str
    n: int
    rows: list

    def row(self, model):
        for r in self.rows:
            if r.model == model:
                return r
        raise KeyError(model)

    def winners(self):
        """Argmin model name per criterion, restricted to estimable rows."""
        return {c: next(r.model for r in self.rows if r.flags.get(c)) for c in CRITERIA}


def _flag_argmins(rows):
    for crit in CRITERIA:
        candidates = [r for r in rows if r.estimable and getattr(r, crit) is not None]
        if not candidates:
            continue
        # ties broken toward smaller k, then model name, for determinism
        best = min(candidates, key=lambda r: (getattr(r, crit), r.k, r.model))
        for r in rows:
            r.flags[crit] = r is best


def build_table(sample_id, n, results):
    """Assemble a SelectionTable from per-model fit results.

    ``results`` maps model name -> (loglik, gof_report) with None marking a
    not-estimable model (kept as a blank row, excluded from the argmin
    competition).  Information criteria use the given n.
    """
    from .mixtures import model_spec

    rows = []
    for name, res in results.items():
        spec = model_spec(name)
        row = SelectionRow(model=name, k=spec.k)
        if res is not None:
            loglik, gof = res
            row.loglik = float(loglik)
            row.aic = aic(loglik, spec.k)
            row.bic = bic(loglik, spec.k, n)
            row.hqc = hqc(loglik, spec.k, n)
            if gof is not None:
                row.ks, row.cm, row.ad = gof.ks, gof.cm, gof.ad
        rows.append(row)
    _flag_argmins(rows)
    return SelectionTable(sample_id=sample_id, n=n, rows=rows)


def summarize_counts(tables):
    """Count argmin flags per (model, criterion) across a battery of tables.

    Column sums equal the number of input tables.
    """
    if not tables:
        raise DomainError("need at least one table")
    models = [r.model for r in tables[0].rows]
    counts = {m: {c: 0 for c in CRITERIA} for m in models}
    for t in tables:
        for r in t.rows:
            for c in CRITERIA:
                if r.flags.get(c):
                    counts[r.model][c] += 1
    return counts
