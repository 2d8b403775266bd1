"""Finite mixtures over one base family and the 17-model catalogue."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .distributions import LLParams, LNParams, LStParams, _BaseDist
from .errors import DomainError

__all__ = [
    "MixtureParams",
    "ModelSpec",
    "MODEL_NAMES",
    "model_spec",
    "canonicalize",
]

# fixed degrees-of-freedom ladders of the log-Student mixtures
FIXED_NUS = {
    "2LSt12": (4.0, 12.0),
    "2LSt39": (4.0, 39.0),
    "3LSt": (4.0, 12.0, 39.0),
    "4LSt": (4.0, 12.0, 39.0, 100.0),
    "5LSt": (4.0, 12.0, 39.0, 100.0, 200.0),
}

MODEL_NAMES = [
    "LN", "DPLN", "GB2", "LNSNP",
    "2LN", "3LN", "4LN", "5LN",
    "2LL", "3LL", "4LL", "5LL",
    "2LSt12", "2LSt39", "3LSt", "4LSt", "5LSt",
]


@dataclass(frozen=True)
class MixtureParams(_BaseDist):
    """Convex combination of ell same-family component densities.

    ``weights`` holds the first ell-1 mixture weights p_1..p_{ell-1}; the
    last weight is 1 - sum(weights).  Components of LN/LL mixtures are kept
    sorted by ascending mu (the label-switching canon); build instances via
    :func:`canonicalize` when the order is not known.
    """

    components: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.components) < 1:
            raise DomainError("mixture needs at least one component")
        if len(self.weights) != len(self.components) - 1:
            raise DomainError("need ell-1 weights for ell components")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or np.any(w > 1) or not 0 <= 1 - w.sum() <= 1 + 1e-12:
            raise DomainError("weights must lie in the simplex")

    @property
    def ell(self):
        return len(self.components)

    @property
    def full_weights(self):
        w = np.asarray(self.weights, dtype=float)
        return np.append(w, 1.0 - w.sum())

    def log_pdf_y(self, y):
        y = np.asarray(y, dtype=float)
        logs = np.stack([c.log_pdf_y(y) for c in self.components], axis=0)
        with np.errstate(divide="ignore"):
            logw = np.log(self.full_weights)
        out = logsumexp(logs + logw[(...,) + (None,) * y.ndim], axis=0)
        return out[()] if np.ndim(out) == 0 else out

    def cdf_y(self, y):
        w = self.full_weights
        return sum(wi * c.cdf_y(y) for wi, c in zip(w, self.components))

    def sf_y(self, y):
        w = self.full_weights
        return sum(wi * c.sf_y(y) for wi, c in zip(w, self.components))


def canonicalize(params):
    """Sort LN/LL mixture components by ascending mu, permuting weights.

    Fixed-nu Student mixtures are returned unchanged (the nu ladder already
    breaks the symmetry); so are single components.  Density values are
    unchanged at every x.
    """
    if not isinstance(params, MixtureParams) or params.ell == 1:
        return params
    comps = params.components
    if any(isinstance(c, LStParams) for c in comps):
        return params
    order = sorted(range(len(comps)), key=lambda i: comps[i].mu)
    if order == list(range(len(comps))):
        return params
    w = params.full_weights[order]
    return MixtureParams(
        components=tuple(comps[i] for i in order),
        weights=tuple(w[:-1]),
    )


@dataclass(frozen=True)
class ModelSpec:
    """One of the 17 model families, or its doubly truncated variant."""

    family: str
    truncated: bool = False
    fixed_nus: tuple = field(default=())

    def __post_init__(self):
        if self.family not in MODEL_NAMES:
            raise DomainError(f"unknown family {self.family!r}")

    @property
    def name(self):
        return self.family + ("tt" if self.truncated else "")

    @property
    def base_family(self):
        """LN, LL, LSt, DPLN, GB2 or LNSNP."""
        f = self.family
        if f in ("DPLN", "GB2", "LNSNP", "LN"):
            return f
        if f.endswith("LL"):
            return "LL"
        if "LSt" in f:
            return "LSt"
        return "LN"

    @property
    def ell(self):
        f = self.family
        if f in ("LN", "DPLN", "GB2", "LNSNP"):
            return 1
        return int(f[0])

    @property
    def k(self):
        """Free-parameter count entering the information criteria."""
        f = self.family
        if f == "LN":
            return 2
        if f in ("DPLN", "GB2"):
            return 4
        if f == "LNSNP":
            return 6
        # mixtures: (mu, sigma) per component plus ell-1 free weights
        return 3 * self.ell - 1

    def component_params(self, mus, sigmas):
        """Build the parameter object from per-component (mu, sigma) arrays."""
        base = self.base_family
        if base == "LSt":
            comps = tuple(
                LStParams(m, s, nu) for m, s, nu in zip(mus, sigmas, self.fixed_nus)
            )
        elif base == "LL":
            comps = tuple(LLParams(m, s) for m, s in zip(mus, sigmas))
        elif base == "LN":
            comps = tuple(LNParams(m, s) for m, s in zip(mus, sigmas))
        else:
            raise DomainError(f"{base} has no (mu, sigma) component form")
        if self.ell == 1:
            return comps[0]
        raise DomainError("use MixtureParams for ell > 1")


def model_spec(name):
    """Resolve a model name like '3LN', '4LSt' or '5LSttt' to a ModelSpec."""
    truncated = name.endswith("tt")
    family = name[:-2] if truncated else name
    if family not in MODEL_NAMES:
        raise DomainError(f"unknown model name {name!r}")
    return ModelSpec(
        family=family,
        truncated=truncated,
        fixed_nus=FIXED_NUS.get(family, ()),
    )
